use pathrep::gp_sim::{PathSampler, SamplingMethod};
use pathrep::{CovarianceModel, TimeGrid};

const PATHS: usize = 4000;
const CELLS: usize = 64;
/// Standard errors allowed between an empirical covariance and the kernel.
const Z: f64 = 4.0;

fn empirical(s: &PathSampler, seed: u64, i: usize, j: usize) -> f64 {
    let b = s.sample_batch(PATHS, seed).unwrap();
    b.iter().map(|p| p.values[i] * p.values[j]).sum::<f64>() / PATHS as f64
}

fn agree(model: CovarianceModel, fast: SamplingMethod) {
    let grid = TimeGrid::uniform(model.horizon(), CELLS).unwrap().shared();
    let c = PathSampler::new(&model, grid.clone()).unwrap();
    assert_eq!(c.method(), fast);
    let d = PathSampler::with_method(&model, grid.clone(), SamplingMethod::Cholesky).unwrap();
    for (i, j) in [(8, 8), (16, 48), (32, 64), (63, 64)] {
        let (t, s) = (grid.time(i), grid.time(j));
        let r = model.covariance(t, s).unwrap();
        let se = ((model.variance(t).unwrap() * model.variance(s).unwrap() + r * r) / PATHS as f64).sqrt();
        let a = empirical(&c, 17, i, j);
        let b = empirical(&d, 18, i, j);
        assert!((a - r).abs() <= Z * se, "{fast:?} R({t},{s}) = {r}, got {a}");
        assert!((b - r).abs() <= Z * se, "Cholesky R({t},{s}) = {r}, got {b}");
        assert!((a - b).abs() <= Z * se * 2f64.sqrt(), "methods differ at ({t},{s}): {a} vs {b}");
    }
}

#[test]
fn circulant_increments_match_cholesky() {
    agree(CovarianceModel::fbm(0.75, 1.0).unwrap(), SamplingMethod::CirculantIncrements);
}

#[test]
fn circulant_stationary_matches_cholesky() {
    // the minimal embedding is valid once the kernel has decayed at the far lag
    agree(CovarianceModel::stationary_exp(0.75, 4.0).unwrap(), SamplingMethod::CirculantStationary);
}

#[test]
fn invalid_embedding_falls_back_to_cholesky() {
    let m = CovarianceModel::stationary_exp(0.75, 1.0).unwrap();
    let grid = TimeGrid::uniform(1.0, CELLS).unwrap().shared();
    assert_eq!(PathSampler::new(&m, grid.clone()).unwrap().method(), SamplingMethod::Cholesky);
    assert!(PathSampler::with_method(&m, grid, SamplingMethod::CirculantStationary).is_err());
}
