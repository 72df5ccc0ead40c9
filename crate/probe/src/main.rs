use nalgebra::DMatrix;
use tlscond::generators::GeneratorSpec;

fn main() {
    let p = GeneratorSpec::gaussian(38, 6, 4).generate().unwrap();
    let aug = p.augmented();
    // raw nalgebra svd
    let svd = aug.clone().svd(true, true);
    let v = svd.v_t.as_ref().unwrap().transpose();
    let k = v.ncols();
    let orth = (v.transpose() * &v - DMatrix::identity(k, k)).norm();
    let orth_u = {
        let u = svd.u.as_ref().unwrap();
        (u.transpose() * u - DMatrix::identity(k, k)).norm()
    };
    let recon = svd.u.as_ref().unwrap() * DMatrix::from_diagonal(&svd.singular_values) * svd.v_t.as_ref().unwrap();
    println!("orth V: {:.3e}  orth U: {:.3e}  recon: {:.3e}", orth, orth_u, (&aug - &recon).norm());
    println!("sigma: {:?}", svd.singular_values.as_slice());

    // with unlimited iterations via try_svd eps/niter variants
    let svd2 = aug.clone().try_svd(true, true, f64::EPSILON, 0).unwrap();
    let v2 = svd2.v_t.as_ref().unwrap().transpose();
    let orth2 = (v2.transpose() * &v2 - DMatrix::identity(k, k)).norm();
    println!("try_svd eps=EPS niter=0 orth V: {:.3e}", orth2);

    // seeds sweep: how common is this?
    let mut bad = 0;
    for seed in 0..200u64 {
        let p = GeneratorSpec::gaussian(38, 6, seed).generate().unwrap();
        let aug = p.augmented();
        let svd = aug.clone().svd(true, true);
        let v = svd.v_t.as_ref().unwrap().transpose();
        let orth = (v.transpose() * &v - DMatrix::identity(7, 7)).norm();
        if orth > 1e-12 { bad += 1; if bad < 5 { println!("seed {seed}: orth {orth:.3e}"); } }
    }
    println!("bad V orthogonality: {bad}/200");
}
