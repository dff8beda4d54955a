//! Configuration-driven runs of the symbol pipeline, with JSON reports and
//! CSV series for plotting. Exit codes: 0 pass, 1 threshold failure, 2
//! input error.

use bergman_core::bergman::{
    bergman_symbol, kernel_eval, projection_matrix, BergmanSymbol, ChiSpec, Grid,
};
use bergman_core::oracle::{
    compare_report, sphere_density, sphere_gauge_weighted, sphere_gram, weight_id, QuadSpec,
    Report, KERNEL_CONVENTION,
};
use bergman_core::series::{growth_fit, HbarSymbolData};
use bergman_core::util::{fnv1a, linear_fit};
use bergman_core::weight::{Weight, WeightData};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "bergman", version, about = "Asymptotic Bergman kernel toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the asymptotic symbol and its coefficient table.
    Symbol(Common),
    /// Evaluate the kernel over a grid against a fixed second point.
    Kernel(Common),
    /// Assemble the discretized projection and report its defects.
    Project(Common),
    /// Compare the asymptotic kernel against the exact Gram projection.
    Compare(Common),
    /// Line-bundle desk model over the sphere.
    Cp1(Common),
}

#[derive(Args)]
struct Common {
    /// Path to the run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override: single hbar value replacing the configured list.
    #[arg(long)]
    hbar: Option<f64>,
    /// Override: expansion order J.
    #[arg(long)]
    order: Option<usize>,
    /// Override: output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Serialize, Deserialize)]
struct GridSpec {
    half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_radius: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    margin: Option<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct Thresholds {
    #[serde(skip_serializing_if = "Option::is_none")]
    min_slope: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    min_r2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_e_last: Option<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hbar: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k_range: Option<[u32; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<Thresholds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
}

struct Failure {
    code: i32,
    msg: String,
}

fn input_err(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

fn threshold_err(msg: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        msg: msg.into(),
    }
}

type CmdResult = Result<(), Failure>;

/// Convention constants pinned by the test suite, recorded in every output.
#[derive(Clone, Serialize)]
struct Manifest {
    config_hash: String,
    tool: &'static str,
    version: &'static str,
    midpoint_flow_scalar: &'static str,
    kernel_convention: &'static str,
    seed: u64,
}

fn main() {
    let cli = Cli::parse();
    let (name, common) = match &cli.cmd {
        Cmd::Symbol(c) => ("symbol", c),
        Cmd::Kernel(c) => ("kernel", c),
        Cmd::Project(c) => ("project", c),
        Cmd::Compare(c) => ("compare", c),
        Cmd::Cp1(c) => ("cp1", c),
    };
    let out = match setup(common) {
        Ok(v) => v,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            std::process::exit(f.code);
        }
    };
    let (config, manifest, out_dir) = out;
    let result = match name {
        "symbol" => cmd_symbol(&config, &manifest, &out_dir).map(|_| ()),
        "kernel" => cmd_kernel(&config, &manifest, &out_dir),
        "project" => cmd_project(&config, &manifest, &out_dir),
        "compare" => cmd_compare(&config, &manifest, &out_dir),
        "cp1" => cmd_cp1(&config, &manifest, &out_dir),
        _ => unreachable!(),
    };
    if let Err(f) = result {
        eprintln!("error: {}", f.msg);
        std::process::exit(f.code);
    }
}

fn setup(common: &Common) -> Result<(RunConfig, Manifest, PathBuf), Failure> {
    let raw = std::fs::read(&common.config)
        .map_err(|e| input_err(format!("cannot read config {}: {e}", common.config.display())))?;
    let mut config: RunConfig = serde_json::from_slice(&raw)
        .map_err(|e| input_err(format!("malformed config: {e}")))?;
    if let Some(h) = common.hbar {
        config.hbar = Some(vec![h]);
    }
    if let Some(j) = common.order {
        config.order = Some(j);
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    validate(&config)?;
    let canonical = serde_json::to_vec(&config).map_err(|e| input_err(e.to_string()))?;
    let manifest = Manifest {
        config_hash: format!("{:016x}", fnv1a(&canonical)),
        tool: "bergman",
        version: env!("CARGO_PKG_VERSION"),
        midpoint_flow_scalar: "c = i/2 per hbar order at t = 1/2",
        kernel_convention: KERNEL_CONVENTION,
        seed: config.seed.unwrap_or(0),
    };
    let out_dir = config
        .out
        .clone()
        .ok_or_else(|| input_err("config needs an output directory (out)"))?;
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| input_err(format!("cannot create {}: {e}", out_dir.display())))?;
    write_bytes(
        &out_dir.join("manifest.json"),
        &pretty(&manifest)?,
    )?;
    Ok((config, manifest, out_dir))
}

fn validate(c: &RunConfig) -> CmdResult {
    if let Some(h) = &c.hbar {
        if h.is_empty() {
            return Err(input_err("hbar list is empty"));
        }
        for v in h {
            if *v <= 0.0 {
                return Err(input_err(format!("hbar must be positive, got {v}")));
            }
        }
        for w in h.windows(2) {
            if w[1] >= w[0] {
                return Err(input_err(format!(
                    "hbar list must be strictly decreasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
    }
    if let Some(j) = c.order {
        if j == 0 {
            return Err(input_err("order must be positive"));
        }
    }
    if let Some(g) = &c.grid {
        if g.half_width <= 0.0 {
            return Err(input_err("grid half_width must be positive"));
        }
        if g.chi_radius.is_some_and(|r| r <= 0.0) {
            return Err(input_err("chi_radius must be positive"));
        }
        if g.margin.is_some_and(|m| m <= 0.0) {
            return Err(input_err("margin must be positive"));
        }
    }
    if let Some([lo, hi]) = c.k_range {
        if lo < 1 || hi < lo {
            return Err(input_err(format!("empty or invalid k range [{lo}, {hi}]")));
        }
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> Result<Vec<u8>, Failure> {
    let mut bytes =
        serde_json::to_vec_pretty(v).map_err(|e| input_err(format!("serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CmdResult {
    std::fs::write(path, bytes)
        .map_err(|e| input_err(format!("cannot write {}: {e}", path.display())))
}

fn load_weight(c: &RunConfig) -> Result<Weight, Failure> {
    let path = c
        .weight
        .as_ref()
        .ok_or_else(|| input_err("config needs a weight file path"))?;
    let raw = std::fs::read(path)
        .map_err(|e| input_err(format!("cannot read weight {}: {e}", path.display())))?;
    let data: WeightData = serde_json::from_slice(&raw)
        .map_err(|e| input_err(format!("malformed weight file: {e}")))?;
    data.to_weight()
        .map_err(|e| input_err(format!("invalid weight: {e}")))
}

fn hbar_list(c: &RunConfig) -> Result<Vec<f64>, Failure> {
    c.hbar
        .clone()
        .ok_or_else(|| input_err("config needs an hbar list"))
}

fn build_symbol(c: &RunConfig) -> Result<(Weight, BergmanSymbol), Failure> {
    let w = load_weight(c)?;
    let order = c.order.unwrap_or(3);
    let s = bergman_symbol(&w, order).map_err(|e| input_err(format!("symbol: {e}")))?;
    Ok((w, s))
}

#[derive(Serialize)]
struct SymbolOutput {
    manifest: Manifest,
    weight_id: String,
    order: usize,
    degree_budget: usize,
    cap_used: usize,
    c_hat: f64,
    growth: GrowthOutput,
    symbol: HbarSymbolData,
}

#[derive(Serialize)]
struct GrowthOutput {
    status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_hat: Option<f64>,
    sups: Vec<f64>,
}

fn growth_summary(s: &BergmanSymbol) -> GrowthOutput {
    if s.order() < 4 {
        return GrowthOutput {
            status: format!("unavailable: order {} < 4", s.order()),
            exponent_p: None,
            c_hat: None,
            sups: vec![],
        };
    }
    let radius = 0.25 * s.weight().eval_radius();
    match growth_fit(s.symbol(), radius) {
        Ok(fit) => match fit.exponent_p {
            Some(p) => GrowthOutput {
                status: "fit".into(),
                exponent_p: Some(p),
                c_hat: Some(fit.c_hat),
                sups: fit.sups,
            },
            None => GrowthOutput {
                status: "degenerate: all-zero tail".into(),
                exponent_p: None,
                c_hat: None,
                sups: fit.sups,
            },
        },
        Err(e) => GrowthOutput {
            status: format!("degenerate: {e}"),
            exponent_p: None,
            c_hat: None,
            sups: vec![],
        },
    }
}

fn coefficient_table(s: &BergmanSymbol) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# asymptotic symbol coefficients, a_j about the base point");
    for j in 0..=s.order() {
        let t = s.symbol().term(j);
        let _ = writeln!(out, "a_{j}:");
        let mut any = false;
        for (i, co) in t.coeffs().iter().enumerate() {
            if co.norm() > 0.0 {
                let _ = writeln!(out, "  {:?}  {}  {}", t.table().multi(i), co.re, co.im);
                any = true;
            }
        }
        if !any {
            let _ = writeln!(out, "  (all zero)");
        }
    }
    out
}

fn cmd_symbol(
    c: &RunConfig,
    manifest: &Manifest,
    out_dir: &Path,
) -> Result<(Weight, BergmanSymbol), Failure> {
    let (w, s) = build_symbol(c)?;
    let output = SymbolOutput {
        manifest: manifest.clone(),
        weight_id: weight_id(&w),
        order: s.order(),
        degree_budget: s.degree_budget(),
        cap_used: s.cap_used(),
        c_hat: s.c_hat(),
        growth: growth_summary(&s),
        symbol: HbarSymbolData::from_symbol(s.symbol()),
    };
    write_bytes(&out_dir.join("symbol.json"), &pretty(&output)?)?;
    write_bytes(
        &out_dir.join("coefficients.txt"),
        coefficient_table(&s).as_bytes(),
    )?;
    Ok((w, s))
}

fn grid_for(c: &RunConfig, hbar: f64, w: &Weight) -> Result<Grid, Failure> {
    let spec = c
        .grid
        .as_ref()
        .ok_or_else(|| input_err("config needs a grid spec"))?;
    let center = w.x0()[0];
    Grid::new(center, spec.half_width, hbar).map_err(|e| input_err(format!("grid: {e}")))
}

fn cmd_kernel(c: &RunConfig, manifest: &Manifest, out_dir: &Path) -> CmdResult {
    let (w, s) = cmd_symbol(c, manifest, out_dir)?;
    let hbars = hbar_list(c)?;
    let hbar = hbars[0];
    let grid = grid_for(c, hbar, &w)?;
    let y = match c.y {
        Some([re, im]) => Complex64::new(re, im),
        None => w.x0()[0],
    };
    let mut csv = String::from("x_re,x_im,y_re,y_im,k_re,k_im,gauge_weighted_abs\n");
    for &x in &grid.points {
        let k = kernel_eval(&s, hbar, &[x], &[y])
            .map_err(|e| input_err(format!("kernel at {x}: {e}")))?;
        let gauge = ((w.phi_at(&[y]) - w.phi_at(&[x])) / hbar).exp();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            x.re,
            x.im,
            y.re,
            y.im,
            k.re,
            k.im,
            k.norm() * gauge
        );
    }
    write_bytes(&out_dir.join("kernel.csv"), csv.as_bytes())
}

#[derive(Serialize)]
struct ProjectOutput {
    manifest: Manifest,
    weight_id: String,
    runs: Vec<ProjectRun>,
}

#[derive(Serialize)]
struct ProjectRun {
    hbar: f64,
    grid_points: usize,
    hermitian_defect: f64,
    reproducing_defects: Vec<f64>,
}

fn cmd_project(c: &RunConfig, manifest: &Manifest, out_dir: &Path) -> CmdResult {
    let (w, s) = build_symbol(c)?;
    let hbars = hbar_list(c)?;
    let spec = c
        .grid
        .as_ref()
        .ok_or_else(|| input_err("config needs a grid spec"))?;
    let chi = match spec.chi_radius {
        Some(r) => ChiSpec::Bump { radius: r },
        None => ChiSpec::One,
    };
    let margin = spec.margin.unwrap_or(0.45 * spec.half_width);
    let mut runs = Vec::new();
    for &hbar in &hbars {
        let grid = grid_for(c, hbar, &w)?;
        let pm = projection_matrix(&s, &grid, hbar, chi)
            .map_err(|e| input_err(format!("projection: {e}")))?;
        let center = w.x0()[0];
        let defects: Vec<f64> = (0..=6u32)
            .map(|j| pm.reproducing_defect(|z| (z - center).powu(j), margin))
            .collect();
        runs.push(ProjectRun {
            hbar,
            grid_points: grid.len(),
            hermitian_defect: pm.hermitian_defect(),
            reproducing_defects: defects,
        });
    }
    let output = ProjectOutput {
        manifest: manifest.clone(),
        weight_id: weight_id(&w),
        runs,
    };
    write_bytes(&out_dir.join("project.json"), &pretty(&output)?)
}

#[derive(Serialize)]
struct CompareOutput {
    manifest: Manifest,
    #[serde(flatten)]
    report: Report,
}

fn cmd_compare(c: &RunConfig, manifest: &Manifest, out_dir: &Path) -> CmdResult {
    let (_, s) = build_symbol(c)?;
    let hbars = hbar_list(c)?;
    let report = compare_report(&s, &hbars, QuadSpec::default())
        .map_err(|e| input_err(format!("comparison: {e}")))?;
    let mut csv = String::from("hbar,x_re,x_im,y_re,y_im,err\n");
    for p in &report.pairs {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            p.hbar, p.x_re, p.x_im, p.y_re, p.y_im, p.err
        );
    }
    write_bytes(&out_dir.join("compare.csv"), csv.as_bytes())?;
    let exact = report.fit.flag == "exact";
    let output = CompareOutput {
        manifest: manifest.clone(),
        report: report.clone(),
    };
    write_bytes(&out_dir.join("report.json"), &pretty(&output)?)?;

    if let Some(t) = &c.thresholds {
        if !exact {
            if let Some(min_slope) = t.min_slope {
                if report.fit.slope <= min_slope {
                    return Err(threshold_err(format!(
                        "fit slope {} fails threshold slope > {min_slope}",
                        report.fit.slope
                    )));
                }
            }
            if let Some(min_r2) = t.min_r2 {
                if report.fit.r2 <= min_r2 {
                    return Err(threshold_err(format!(
                        "fit r2 {} fails threshold r2 > {min_r2}",
                        report.fit.r2
                    )));
                }
            }
        }
        if let Some(max_e) = t.max_e_last {
            let e_last = *report.e.last().unwrap();
            if e_last >= max_e {
                return Err(threshold_err(format!(
                    "E at smallest hbar is {e_last}, fails threshold E < {max_e}"
                )));
            }
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SphereOutput {
    manifest: Manifest,
    rows: Vec<SphereRow>,
    density_fit: Option<DensityFit>,
    decay: Option<DecaySummary>,
}

#[derive(Serialize)]
struct SphereRow {
    k: u32,
    dim: usize,
    density: f64,
}

#[derive(Serialize)]
struct DensityFit {
    c0: f64,
    c1: f64,
    max_relative_residual: f64,
}

#[derive(Serialize)]
struct DecaySummary {
    pair: [[f64; 2]; 2],
    fitted_c: f64,
    r2: f64,
}

fn cmd_cp1(c: &RunConfig, manifest: &Manifest, out_dir: &Path) -> CmdResult {
    let [lo, hi] = c
        .k_range
        .ok_or_else(|| input_err("config needs a k_range"))?;
    let mut rows = Vec::new();
    let mut csv = String::from("k,dim,density\n");
    for k in lo..=hi {
        let o = sphere_gram(k).map_err(|e| input_err(format!("sphere sections: {e}")))?;
        let density = sphere_density(&o, Complex64::new(0.3, -0.4))
            .map_err(|e| input_err(format!("density: {e}")))?;
        let _ = writeln!(csv, "{},{},{}", k, o.basis_len(), density);
        rows.push(SphereRow {
            k,
            dim: o.basis_len(),
            density,
        });
    }
    write_bytes(&out_dir.join("cp1.csv"), csv.as_bytes())?;

    let fit_rows: Vec<&SphereRow> = rows.iter().filter(|r| r.k >= 8).collect();
    let density_fit = if fit_rows.len() >= 3 {
        let xs: Vec<f64> = fit_rows.iter().map(|r| r.k as f64).collect();
        let ys: Vec<f64> = fit_rows.iter().map(|r| r.density).collect();
        let fit = linear_fit(&xs, &ys).map_err(|e| input_err(format!("density fit: {e}")))?;
        let mut worst = 0.0f64;
        for (x, y) in xs.iter().zip(&ys) {
            worst = worst.max((fit.slope * x + fit.intercept - y).abs() / y.abs());
        }
        Some(DensityFit {
            c0: fit.slope,
            c1: fit.intercept,
            max_relative_residual: worst,
        })
    } else {
        None
    };

    let x = Complex64::new(1.0, 0.0);
    let y = Complex64::new(-0.8, 0.1);
    let decay = if hi > lo {
        let mut ks = Vec::new();
        let mut logs = Vec::new();
        for k in lo..=hi {
            let o = sphere_gram(k).map_err(|e| input_err(format!("sphere sections: {e}")))?;
            let v = sphere_gauge_weighted(&o, x, y)
                .map_err(|e| input_err(format!("gauge: {e}")))?;
            ks.push(k as f64);
            logs.push(v.ln());
        }
        let fit = linear_fit(&ks, &logs).map_err(|e| input_err(format!("decay fit: {e}")))?;
        Some(DecaySummary {
            pair: [[x.re, x.im], [y.re, y.im]],
            fitted_c: -1.0 / fit.slope,
            r2: fit.r2,
        })
    } else {
        None
    };

    let output = SphereOutput {
        manifest: manifest.clone(),
        rows,
        density_fit,
        decay,
    };
    write_bytes(&out_dir.join("cp1.json"), &pretty(&output)?)
}
