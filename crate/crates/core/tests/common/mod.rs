#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use ciugraph::lexicon::CiuId;
use ciugraph::spatial::{CoordinateTable, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const REFERENCE_SEQUENCE: [u8; 21] = [3, 15, 9, 20, 12, 1, 2, 6, 7, 23, 22, 1, 2, 18, 8, 17, 6, 5, 2, 21, 1];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn ids(values: &[u8]) -> Vec<CiuId> {
    values.iter().map(|&v| CiuId::new(v as i64).unwrap()).collect()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

pub fn opt_close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => rel_close(a, b, tol) || (a - b).abs() < 1e-12,
        _ => false,
    }
}

pub fn random_table(rng: &mut ChaCha8Rng) -> CoordinateTable {
    let (w, h) = (rng.random_range(50.0..2000.0), rng.random_range(50.0..2000.0));
    let coords: BTreeMap<CiuId, Point> = CiuId::all()
        .map(|id| (id, Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h))))
        .collect();
    let center = Point::new(rng.random_range(0.0..w), rng.random_range(0.0..h));
    CoordinateTable::new(coords, w, h, Some(center)).unwrap()
}

pub fn random_sequence(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<CiuId> {
    let len = rng.random_range(0..=max_len);
    // small alphabets now and then so repeats and self-loops are common
    let alphabet = if rng.random_bool(0.3) {
        rng.random_range(1..=4)
    } else {
        23
    };
    (0..len)
        .map(|_| CiuId::new(rng.random_range(1..=alphabet)).unwrap())
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Features straight from their definitions, without the graph types.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleFeatures {
    pub avg_x: Option<f64>,
    pub std_x: Option<f64>,
    pub avg_y: Option<f64>,
    pub std_y: Option<f64>,
    pub total_path: Option<f64>,
    pub unique_nodes: Option<f64>,
    pub path_per_unique: Option<f64>,
    pub nodes: f64,
    pub self_cycles: Option<f64>,
    pub cycles: Option<f64>,
    pub self_cycles_quad: Option<f64>,
    pub cross_ratio_quad: Option<f64>,
}

pub fn oracle_features(seq: &[CiuId], table: &CoordinateTable) -> OracleFeatures {
    let n = seq.len();
    if n == 0 {
        return OracleFeatures {
            avg_x: None,
            std_x: None,
            avg_y: None,
            std_y: None,
            total_path: None,
            unique_nodes: None,
            path_per_unique: None,
            nodes: 0.0,
            self_cycles: None,
            cycles: None,
            self_cycles_quad: None,
            cross_ratio_quad: None,
        };
    }
    let pts: Vec<(f64, f64)> = seq
        .iter()
        .map(|&id| {
            let p = table.get(id).unwrap();
            (p.x, p.y)
        })
        .collect();
    let mean = |f: &dyn Fn(&(f64, f64)) -> f64| pts.iter().map(f).sum::<f64>() / n as f64;
    let ax = mean(&|p| p.0);
    let ay = mean(&|p| p.1);
    let sx = mean(&|p| (p.0 - ax) * (p.0 - ax)).sqrt();
    let sy = mean(&|p| (p.1 - ay) * (p.1 - ay)).sqrt();

    let mut path = 0.0;
    for i in 1..n {
        let (a, b) = (pts[i - 1], pts[i]);
        path += ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
    }

    let mut unique = 0usize;
    for i in 0..n {
        if !seq[..i].contains(&seq[i]) {
            unique += 1;
        }
    }
    let self_cycles = (1..n).filter(|&i| seq[i] == seq[i - 1]).count();

    // quadrants by direct comparison with the center: right if x >= cx, bottom if y >= cy
    let c = table.center();
    let quad: Vec<(bool, bool)> = pts.iter().map(|p| (p.0 >= c.x, p.1 >= c.y)).collect();
    let same = (1..n).filter(|&i| quad[i] == quad[i - 1]).count();
    let cross = (n - 1) - same;

    OracleFeatures {
        avg_x: Some(ax),
        std_x: Some(sx),
        avg_y: Some(ay),
        std_y: Some(sy),
        total_path: Some(path),
        unique_nodes: Some(unique as f64),
        path_per_unique: Some(path / unique as f64),
        nodes: n as f64,
        self_cycles: Some(self_cycles as f64),
        cycles: Some((n - unique) as f64),
        self_cycles_quad: Some(same as f64),
        cross_ratio_quad: if same == 0 {
            None
        } else {
            Some(cross as f64 / same as f64)
        },
    }
}

/// Least squares through the normal equations XᵀX b = Xᵀy, solved by
/// Gauss-Jordan elimination with partial pivoting. Returns (b, rss, (XᵀX)⁻¹).
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64, Vec<Vec<f64>>) {
    let n = x.len();
    let p = x[0].len();
    let mut aug = vec![vec![0.0; 2 * p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            aug[i][j] = (0..n).map(|r| x[r][i] * x[r][j]).sum();
        }
        aug[i][p + i] = 1.0;
        aug[i][2 * p] = (0..n).map(|r| x[r][i] * y[r]).sum();
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&a, &b| aug[a][col].abs().partial_cmp(&aug[b][col].abs()).unwrap())
            .unwrap();
        aug.swap(col, pivot);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        for r in 0..p {
            if r != col {
                let f = aug[r][col];
                let row = aug[col].clone();
                for (v, rv) in aug[r].iter_mut().zip(row) {
                    *v -= f * rv;
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| aug[i][2 * p]).collect();
    let inv: Vec<Vec<f64>> = (0..p).map(|i| aug[i][p..2 * p].to_vec()).collect();
    let rss = (0..n)
        .map(|r| {
            let fit: f64 = (0..p).map(|j| x[r][j] * beta[j]).sum();
            (y[r] - fit).powi(2)
        })
        .sum();
    (beta, rss, inv)
}
