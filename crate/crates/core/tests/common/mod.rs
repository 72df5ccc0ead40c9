use tlscond::generators::GeneratorSpec;
use tlscond::{DMatrix, DVector, TlsProblem};

/// The 2x1 problem with golden-ratio spectrum; every quantity has a
/// closed form in phi = (1+sqrt5)/2.
pub fn golden_problem() -> TlsProblem {
    TlsProblem::new(
        DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        DVector::from_vec(vec![1.0, 0.0]),
    )
    .unwrap()
}

/// A mixed battery of generic problems across all generator families.
/// Gap sizes range from comfortable to small-but-resolvable.
pub fn generic_battery() -> Vec<(String, TlsProblem)> {
    let mut specs = vec![
        GeneratorSpec::vanhuffel(6),
        GeneratorSpec::vanhuffel(50),
        GeneratorSpec::bg_example(30, 5, 1e-3, 3),
        GeneratorSpec::bg_example(25, 8, 1e-7, 4),
        GeneratorSpec::toeplitz_blur(40, 9),
    ];
    for (i, &alpha) in [0.05, 0.15, 0.35, 0.49].iter().enumerate() {
        specs.push(GeneratorSpec::controlled_alpha(18, 5, alpha, 20 + i as u64));
    }
    for seed in 0..6u64 {
        specs.push(GeneratorSpec::gaussian(14 + seed as usize, 4, 100 + seed));
    }
    let mut battery: Vec<(String, TlsProblem)> =
        specs.iter().map(|s| (s.id(), s.generate().unwrap())).collect();
    battery.push(("golden".to_string(), golden_problem()));
    battery
}

/// Subset with comfortably large genericity gaps where the shifted normal
/// equations are well-conditioned enough for tight cross-route agreement.
pub fn well_gapped_battery() -> Vec<(String, TlsProblem)> {
    generic_battery()
        .into_iter()
        .filter(|(id, _)| !id.contains("e_p=1e-7") && !id.contains("toeplitz"))
        .collect()
}
