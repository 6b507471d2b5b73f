//! Independent reference implementations used as test oracles. None of
//! these call into the library code they check.

#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(rel)
}

/// Precision, recall, F1 from overlap counts; zero when anything is empty.
pub fn prf(overlap: usize, cand_total: usize, ref_total: usize) -> (f64, f64, f64) {
    if overlap == 0 || cand_total == 0 || ref_total == 0 {
        return (0.0, 0.0, 0.0);
    }
    let p = overlap as f64 / cand_total as f64;
    let r = overlap as f64 / ref_total as f64;
    (p, r, 2.0 * p * r / (p + r))
}

/// ROUGE-N by listing every n-gram of both sides and matching them one by
/// one, removing each matched reference n-gram so it is used at most once.
pub fn brute_rouge_n(cand: &[u32], refs: &[u32], n: usize) -> (f64, f64, f64) {
    let grams = |s: &[u32]| -> Vec<Vec<u32>> {
        if s.len() < n {
            return Vec::new();
        }
        (0..=s.len() - n).map(|i| s[i..i + n].to_vec()).collect()
    };
    let cg = grams(cand);
    let mut rg = grams(refs);
    let mut overlap = 0;
    for g in &cg {
        if let Some(pos) = rg.iter().position(|x| x == g) {
            rg.swap_remove(pos);
            overlap += 1;
        }
    }
    prf(overlap, cg.len(), grams(refs).len())
}

/// Top-down memoized LCS length of `a[..i]` and `b[..j]`.
struct LcsMemo<'a> {
    a: &'a [u32],
    b: &'a [u32],
    memo: HashMap<(usize, usize), usize>,
}

impl<'a> LcsMemo<'a> {
    fn new(a: &'a [u32], b: &'a [u32]) -> Self {
        Self {
            a,
            b,
            memo: HashMap::new(),
        }
    }

    fn len(&mut self, i: usize, j: usize) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if let Some(&v) = self.memo.get(&(i, j)) {
            return v;
        }
        let v = if self.a[i - 1] == self.b[j - 1] {
            1 + self.len(i - 1, j - 1)
        } else {
            self.len(i - 1, j).max(self.len(i, j - 1))
        };
        self.memo.insert((i, j), v);
        v
    }
}

/// Reference positions of the lexicographically first optimal alignment,
/// walking back from the end and preferring match, then dropping a
/// reference token, then dropping a candidate token.
pub fn preferred_lcs_positions(refs: &[u32], cand: &[u32]) -> Vec<usize> {
    let mut m = LcsMemo::new(refs, cand);
    let (mut i, mut j) = (refs.len(), cand.len());
    let mut out = Vec::new();
    while i > 0 && j > 0 {
        let here = m.len(i, j);
        if refs[i - 1] == cand[j - 1] && 1 + m.len(i - 1, j - 1) == here {
            out.push(i - 1);
            i -= 1;
            j -= 1;
        } else if m.len(i - 1, j) == here {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    out.reverse();
    out
}

/// Same preference order, found by enumerating every alignment path with
/// no memoization. Exponential; only for short inputs.
pub fn exhaustive_lcs_positions(refs: &[u32], cand: &[u32]) -> Vec<usize> {
    // Each path is a list of moves from the end: 0 = match, 1 = drop ref,
    // 2 = drop cand. Keep the longest, then the lexicographically smallest.
    fn walk(refs: &[u32], cand: &[u32], i: usize, j: usize, moves: &mut Vec<u8>, best: &mut Option<(usize, Vec<u8>)>) {
        if i == 0 || j == 0 {
            let len = moves.iter().filter(|&&m| m == 0).count();
            let better = match best {
                None => true,
                Some((bl, bm)) => len > *bl || (len == *bl && moves.as_slice() < bm.as_slice()),
            };
            if better {
                *best = Some((len, moves.clone()));
            }
            return;
        }
        if refs[i - 1] == cand[j - 1] {
            moves.push(0);
            walk(refs, cand, i - 1, j - 1, moves, best);
            moves.pop();
        }
        moves.push(1);
        walk(refs, cand, i - 1, j, moves, best);
        moves.pop();
        moves.push(2);
        walk(refs, cand, i, j - 1, moves, best);
        moves.pop();
    }
    let mut best = None;
    walk(refs, cand, refs.len(), cand.len(), &mut Vec::new(), &mut best);
    let (_, moves) = best.unwrap();
    let (mut i, mut out) = (refs.len(), Vec::new());
    for m in moves {
        match m {
            0 => {
                out.push(i - 1);
                i -= 1;
            }
            1 => i -= 1,
            _ => {}
        }
    }
    out.reverse();
    out
}

/// Summary-level ROUGE-L: per reference sentence, the union of its
/// preferred LCS positions against every candidate sentence; each hit is
/// counted only while both sides still have unused copies of the token.
pub fn brute_rouge_lsum(cand: &[Vec<u32>], refs: &[Vec<u32>]) -> (f64, f64, f64) {
    let cand_total: usize = cand.iter().map(Vec::len).sum();
    let ref_total: usize = refs.iter().map(Vec::len).sum();
    let mut left_c: HashMap<u32, usize> = HashMap::new();
    let mut left_r: HashMap<u32, usize> = HashMap::new();
    for t in cand.iter().flatten() {
        *left_c.entry(*t).or_default() += 1;
    }
    for t in refs.iter().flatten() {
        *left_r.entry(*t).or_default() += 1;
    }
    let mut hits = 0;
    for r in refs {
        let mut union: Vec<usize> = cand.iter().flat_map(|c| preferred_lcs_positions(r, c)).collect();
        union.sort_unstable();
        union.dedup();
        for pos in union {
            let t = r[pos];
            let (c, rr) = (left_c.get(&t).copied().unwrap_or(0), left_r.get(&t).copied().unwrap_or(0));
            if c > 0 && rr > 0 {
                hits += 1;
                *left_c.get_mut(&t).unwrap() -= 1;
                *left_r.get_mut(&t).unwrap() -= 1;
            }
        }
    }
    prf(hits, cand_total, ref_total)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// BERTScore by scanning every (candidate, reference) pair. `wc`/`wr` are
/// per-token weights (not yet normalized).
pub fn brute_bert_score(cand: &[Vec<f64>], refs: &[Vec<f64>], wc: &[f64], wr: &[f64]) -> (f64, f64, f64) {
    let weighted = |rows: &[Vec<f64>], other: &[Vec<f64>], w: &[f64]| -> f64 {
        let total: f64 = w.iter().sum();
        let mut acc = 0.0;
        for (row, wi) in rows.iter().zip(w) {
            let mut best = f64::NEG_INFINITY;
            for o in other {
                best = best.max(cosine(row, o));
            }
            acc += wi * best;
        }
        acc / total
    };
    let p = weighted(cand, refs, wc);
    let r = weighted(refs, cand, wr);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// Plain nested-vector matrix helpers for dense oracles.
pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

/// The 16 NF4 levels rebuilt from normal quantiles: 8 positive levels from
/// quantiles evenly spaced between `offset` and 0.5, 7 negative ones likewise,
/// plus zero, all divided by the largest.
pub fn nf4_levels() -> Vec<f64> {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::new(0.0, 1.0).unwrap();
    let offset = 0.9677083;
    let spaced = |count: usize| -> Vec<f64> {
        (0..count - 1)
            .map(|i| offset + (0.5 - offset) * i as f64 / (count - 1) as f64)
            .collect()
    };
    let mut levels: Vec<f64> = spaced(9).into_iter().map(|q| normal.inverse_cdf(q)).collect();
    levels.extend(spaced(8).into_iter().map(|q| -normal.inverse_cdf(q)));
    levels.push(0.0);
    let top = levels.iter().cloned().fold(f64::MIN, f64::max);
    let mut levels: Vec<f64> = levels.into_iter().map(|v| v / top).collect();
    levels.sort_by(f64::total_cmp);
    levels
}
