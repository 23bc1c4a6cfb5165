//! The encoder and classifier against a naive scalar re-implementation
//! working on nested vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagewin::model::{
    attention, entropy_weights, forward, stage_encode, HeadParams, ModelConfig, ModelParams, StageParams,
};
use stagewin::numerics::Matrix;

type Grid = Vec<Vec<f64>>;

fn grid(m: &Matrix) -> Grid {
    (0..m.rows()).map(|r| m.row(r).to_vec()).collect()
}

fn mm(a: &Grid, b: &Grid) -> Grid {
    let (n, p) = (b.len(), b[0].len());
    a.iter()
        .map(|row| (0..p).map(|j| (0..n).map(|k| row[k] * b[k][j]).sum()).collect())
        .collect()
}

fn naive_entropy(row: &[f64], eps: f64) -> f64 {
    let total: f64 = row.iter().map(|v| v.abs() + eps).sum();
    row.iter()
        .map(|v| {
            let p = (v.abs() + eps) / total;
            -p * p.ln()
        })
        .sum()
}

fn naive_layer_norm(x: &Grid) -> Grid {
    x.iter()
        .map(|row| {
            let d = row.len() as f64;
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d;
            row.iter().map(|v| (v - mean) / (var + 1e-5).sqrt()).collect()
        })
        .collect()
}

fn naive_head(z: &Grid, h: &HeadParams, w: Option<&[f64]>) -> Grid {
    let (q, k, v) = (mm(z, &grid(&h.wq)), mm(z, &grid(&h.wk)), mm(z, &grid(&h.wv)));
    let dk = q[0].len() as f64;
    let t = z.len();
    (0..t)
        .map(|i| {
            let scores: Vec<f64> = (0..t)
                .map(|j| {
                    let s: f64 = (0..q[0].len()).map(|c| q[i][c] * k[j][c]).sum::<f64>() / dk.sqrt();
                    s * w.map_or(1.0, |w| w[j])
                })
                .collect();
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let total: f64 = e.iter().sum();
            (0..v[0].len())
                .map(|c| (0..t).map(|j| e[j] / total * v[j][c]).sum())
                .collect()
        })
        .collect()
}

fn add(a: &Grid, b: &Grid) -> Grid {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect())
        .collect()
}

fn naive_stage(z: &Grid, p: &StageParams, cfg: &ModelConfig) -> Vec<f64> {
    let weights: Option<Vec<f64>> = cfg
        .use_weighted_attention
        .then(|| z.iter().map(|r| naive_entropy(r, cfg.entropy_epsilon)).collect());
    let heads: Vec<Grid> = p.heads.iter().map(|h| naive_head(z, h, weights.as_deref())).collect();
    let concat: Grid = (0..z.len())
        .map(|t| heads.iter().flat_map(|h| h[t].clone()).collect())
        .collect();
    let mut u = mm(&concat, &grid(&p.wo));
    if cfg.use_residual_norm {
        u = naive_layer_norm(&add(&u, z));
    }
    let hidden: Grid = mm(&u, &grid(&p.w1))
        .into_iter()
        .map(|r| r.iter().zip(&p.b1).map(|(a, b)| (a + b).max(0.0)).collect())
        .collect();
    let mut g: Grid = mm(&hidden, &grid(&p.w2))
        .into_iter()
        .map(|r| r.iter().zip(&p.b2).map(|(a, b)| a + b).collect())
        .collect();
    if cfg.use_residual_norm {
        g = naive_layer_norm(&add(&g, &u));
    }
    (0..cfg.d).map(|c| g.iter().map(|r| r[c]).sum::<f64>() / g.len() as f64).collect()
}

fn naive_score(zs: &[Grid], params: &ModelParams, cfg: &ModelConfig) -> f64 {
    let features: Vec<f64> = zs
        .iter()
        .zip(&params.stages)
        .flat_map(|(z, p)| naive_stage(z, p, cfg))
        .collect();
    let logit: f64 = features.iter().zip(&params.wc).map(|(f, w)| f * w).sum::<f64>() + params.bc;
    1.0 / (1.0 + (-logit).exp())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let v = (0..rows * cols).map(|_| rng.random_range(-1.5..1.5)).collect();
    Matrix::from_vec(rows, cols, v).unwrap()
}

#[test]
fn stage_and_score_match_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for case in 0..40 {
        let cfg = ModelConfig {
            d: rng.random_range(1..=5),
            d_k: rng.random_range(1..=4),
            heads: rng.random_range(1..=3),
            stages: rng.random_range(1..=3),
            ffn_hidden: rng.random_range(1..=6),
            use_weighted_attention: case % 2 == 0,
            use_residual_norm: case % 3 != 0,
            ..ModelConfig::default()
        };
        let mut params = ModelParams::init(&cfg, case);
        for sp in &mut params.stages {
            sp.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
            sp.b2.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        }
        params.bc = rng.random_range(-0.5..0.5);
        let zs: Vec<Matrix> = (0..cfg.stages)
            .map(|k| random_matrix(2 + 3 * k, cfg.d, &mut rng))
            .collect();
        for (z, sp) in zs.iter().zip(&params.stages) {
            let w = cfg.use_weighted_attention.then(|| entropy_weights(z, cfg.entropy_epsilon));
            let ours = stage_encode(z, w.as_ref(), sp, &cfg).unwrap();
            let oracle = naive_stage(&grid(z), sp, &cfg);
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-12, "case {case}: {a} vs {b}");
            }
        }
        let s = forward(&zs, &params, &cfg).unwrap();
        let oracle = naive_score(&zs.iter().map(grid).collect::<Vec<_>>(), &params, &cfg);
        assert!((s - oracle).abs() < 1e-12, "case {case}: {s} vs {oracle}");
    }
}

/// K = 1, W = 2, d = 2, d_k = 1, h = 1, all weights set by hand, bare
/// formula (no residual/norm) and plain attention.
#[test]
fn tiny_fixed_model_by_hand() {
    let cfg = ModelConfig {
        d: 2,
        d_k: 1,
        heads: 1,
        stages: 1,
        ffn_hidden: 1,
        use_weighted_attention: false,
        use_residual_norm: false,
        ..ModelConfig::default()
    };
    let params = ModelParams {
        stages: vec![StageParams {
            heads: vec![HeadParams {
                wq: Matrix::from_rows(&[[1.0], [0.0]]),
                wk: Matrix::from_rows(&[[1.0], [0.0]]),
                wv: Matrix::from_rows(&[[0.0], [1.0]]),
            }],
            wo: Matrix::from_rows(&[[1.0, 2.0]]),
            w1: Matrix::from_rows(&[[1.0], [1.0]]),
            b1: vec![0.0],
            w2: Matrix::from_rows(&[[1.0, -1.0]]),
            b2: vec![0.5, 0.0],
        }],
        wc: vec![1.0, 1.0],
        bc: -1.0,
    };
    // z rows: [1, 2], [0, 4]; q = k = [1, 0]; v = [2, 4]
    // scores: row 0 [1, 0], row 1 [0, 0]
    let z = Matrix::from_rows(&[[1.0, 2.0], [0.0, 4.0]]);
    let e = std::f64::consts::E;
    let ctx0 = (2.0 * e + 4.0) / (e + 1.0);
    let ctx1 = 3.0;
    // U = ctx · [1, 2]; hidden = relu(U · [1, 1]) = 3·ctx; G = hidden · [1, −1] + [0.5, 0]
    let g = |c: f64| [3.0 * c + 0.5, -3.0 * c];
    let (g0, g1) = (g(ctx0), g(ctx1));
    let pooled = [(g0[0] + g1[0]) / 2.0, (g0[1] + g1[1]) / 2.0];
    let logit = pooled[0] + pooled[1] - 1.0;
    let expected = 1.0 / (1.0 + (-logit).exp());
    let s = forward(&[z], &params, &cfg).unwrap();
    assert!((s - expected).abs() < 1e-12, "{s} vs {expected}");
}

#[test]
fn constant_rows_pool_to_single_row_transform() {
    let cfg = ModelConfig {
        d: 3,
        d_k: 3,
        heads: 1,
        stages: 1,
        ffn_hidden: 3,
        use_residual_norm: false,
        ..ModelConfig::default()
    };
    let mut p = ModelParams::zeros(&cfg);
    let sp = &mut p.stages[0];
    sp.heads[0] = HeadParams {
        wq: Matrix::identity(3),
        wk: Matrix::identity(3),
        wv: Matrix::identity(3),
    };
    sp.wo = Matrix::identity(3);
    sp.w1 = Matrix::identity(3);
    sp.w2 = Matrix::identity(3);
    let row = [0.7, -0.2, 1.3];
    let single = stage_encode(&Matrix::from_rows(&[row]), None, sp, &cfg).unwrap();
    let many = stage_encode(&Matrix::from_rows(&[row; 6]), None, sp, &cfg).unwrap();
    for (a, b) in single.iter().zip(&many) {
        assert!((a - b).abs() < 1e-12);
    }
    // identity chain with relu: negative coordinates vanish
    assert_eq!(single, vec![0.7, 0.0, 1.3]);
}

#[test]
fn attention_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let head = HeadParams {
        wq: random_matrix(4, 3, &mut rng),
        wk: random_matrix(4, 3, &mut rng),
        wv: random_matrix(4, 3, &mut rng),
    };
    let z = random_matrix(6, 4, &mut rng);
    let perm = [3, 0, 5, 1, 4, 2];
    let zp = Matrix::from_rows(&perm.iter().map(|&i| z.row(i).to_vec()).collect::<Vec<_>>());
    for weighted in [false, true] {
        let w = weighted.then(|| entropy_weights(&z, 1e-6));
        let wp = weighted.then(|| entropy_weights(&zp, 1e-6));
        let out = attention(&z, &head, w.as_ref()).unwrap();
        let out_p = attention(&zp, &head, wp.as_ref()).unwrap();
        for (r, &i) in perm.iter().enumerate() {
            for c in 0..out.cols() {
                assert!((out_p.get(r, c) - out.get(i, c)).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn score_increases_with_logit() {
    let cfg = ModelConfig {
        d: 2,
        d_k: 2,
        heads: 1,
        stages: 1,
        ffn_hidden: 2,
        ..ModelConfig::default()
    };
    let mut p = ModelParams::init(&cfg, 3);
    let z = vec![Matrix::from_rows(&[[0.3, -1.0], [1.1, 0.2]])];
    let mut last = 0.0;
    for step in 0..40 {
        p.bc = -8.0 + 0.4 * step as f64;
        let s = forward(&z, &p, &cfg).unwrap();
        assert!(s > last && s < 1.0);
        last = s;
    }
}
