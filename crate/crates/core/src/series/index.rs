//! Graded-lexicographic monomial tables shared by all jets of a given shape.
//!
//! A table enumerates every multi-index of total degree <= cap in a fixed
//! number of variables. Tables are interned globally so jets of the same
//! shape share one `Arc` and positions can be compared without re-hashing.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

/// Interned enumeration of multi-indices with |alpha| <= cap, ordered by
/// total degree and lexicographically within each degree.
pub struct IndexTable {
    arity: usize,
    cap: usize,
    multi: Vec<Vec<u32>>,
    degree: Vec<u32>,
    pos: HashMap<Vec<u32>, u32>,
    /// Lazily built table of `pos(alpha_i + alpha_j)`, `u32::MAX` when the
    /// sum exceeds the cap. Only built for tables small enough to afford it.
    sum_pos: OnceLock<Option<Vec<u32>>>,
}

const SUM_TABLE_MAX_LEN: usize = 4096;

impl IndexTable {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.multi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.multi.is_empty()
    }

    pub fn multi(&self, i: usize) -> &[u32] {
        &self.multi[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.degree[i] as usize
    }

    pub fn position(&self, alpha: &[u32]) -> Option<usize> {
        self.pos.get(alpha).map(|&p| p as usize)
    }

    /// Position of `multi(i) + multi(j)`, or `None` past the cap.
    pub fn sum_position(&self, i: usize, j: usize) -> Option<usize> {
        let table = self.sum_pos.get_or_init(|| {
            if self.len() > SUM_TABLE_MAX_LEN {
                return None;
            }
            let m = self.len();
            let mut t = vec![u32::MAX; m * m];
            let mut sum = vec![0u32; self.arity];
            for a in 0..m {
                for b in 0..m {
                    if self.degree[a] + self.degree[b] > self.cap as u32 {
                        continue;
                    }
                    for (k, s) in sum.iter_mut().enumerate() {
                        *s = self.multi[a][k] + self.multi[b][k];
                    }
                    t[a * m + b] = self.pos[&sum];
                }
            }
            Some(t)
        });
        match table {
            Some(t) => match t[i * self.len() + j] {
                u32::MAX => None,
                p => Some(p as usize),
            },
            None => {
                if self.degree[i] + self.degree[j] > self.cap as u32 {
                    return None;
                }
                let sum: Vec<u32> = self.multi[i]
                    .iter()
                    .zip(&self.multi[j])
                    .map(|(a, b)| a + b)
                    .collect();
                self.position(&sum)
            }
        }
    }
}

fn build(arity: usize, cap: usize) -> IndexTable {
    assert!(arity >= 1, "index table needs at least one variable");
    let mut multi = Vec::new();
    let mut cur = vec![0u32; arity];
    for d in 0..=cap as u32 {
        emit_degree(&mut multi, &mut cur, 0, d);
    }
    let degree: Vec<u32> = multi.iter().map(|m| m.iter().sum()).collect();
    let pos = multi
        .iter()
        .enumerate()
        .map(|(i, m)| (m.clone(), i as u32))
        .collect();
    IndexTable {
        arity,
        cap,
        multi,
        degree,
        pos,
        sum_pos: OnceLock::new(),
    }
}

fn emit_degree(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, var: usize, remaining: u32) {
    if var + 1 == cur.len() {
        cur[var] = remaining;
        out.push(cur.clone());
        return;
    }
    // Lexicographic within a degree: highest exponent on the first variable first.
    for e in (0..=remaining).rev() {
        cur[var] = e;
        emit_degree(out, cur, var + 1, remaining - e);
    }
}

/// Fetch (or build) the interned table for the given shape.
pub fn table(arity: usize, cap: usize) -> Arc<IndexTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<IndexTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((arity, cap))
        .or_insert_with(|| Arc::new(build(arity, cap)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_binomial() {
        // #{|alpha| <= D in k vars} = C(D + k, k)
        assert_eq!(table(1, 4).len(), 5);
        assert_eq!(table(2, 3).len(), 10);
        assert_eq!(table(3, 2).len(), 10);
        assert_eq!(table(3, 16).len(), 969);
    }

    #[test]
    fn graded_order_and_lookup() {
        let t = table(2, 2);
        assert_eq!(t.multi(0), &[0, 0]);
        let mut last_deg = 0;
        for i in 0..t.len() {
            assert!(t.degree(i) >= last_deg);
            last_deg = t.degree(i);
            assert_eq!(t.position(t.multi(i)), Some(i));
        }
        assert_eq!(t.position(&[3, 0]), None);
    }

    #[test]
    fn sum_positions_truncate_at_cap() {
        let t = table(2, 2);
        let x = t.position(&[1, 0]).unwrap();
        let y = t.position(&[0, 1]).unwrap();
        let xy = t.position(&[1, 1]).unwrap();
        assert_eq!(t.sum_position(x, y), Some(xy));
        assert_eq!(t.sum_position(xy, x), None);
    }

    #[test]
    fn interning_shares_tables() {
        let a = table(2, 5);
        let b = table(2, 5);
        assert!(Arc::ptr_eq(&a, &b));
    }
}
