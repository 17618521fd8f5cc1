use cylcover_core::cover::{bracket_cover_time, run_cover_seeded, CoverTarget, DEFAULT_MAX_LINES};
use cylcover_core::lineproc::Window;
use cylcover_core::net::{build_net, GeometrySpec, DEFAULT_K};
use cylcover_core::verify::{ks_two_sample, Ecdf};
use cylcover_core::{Purpose, StreamKey};

fn key(seed: u64, rep: u64) -> StreamKey {
    StreamKey::new(seed, Purpose::Lines, rep)
}

#[test]
fn larger_window_same_law() {
    let net = build_net(&GeometrySpec::grid(4, 2), 0.5, DEFAULT_K).unwrap();
    let tight = CoverTarget::new(net.clone()).unwrap();
    let w = tight.window();
    let wide = CoverTarget::with_window(net, Window::new(w.center().to_vec(), w.radius() + 1.0).unwrap()).unwrap();
    // 2e4 per side: the 0.02 threshold then has a null failure rate near 1e-3.
    let reps = 20_000;
    let run = |t: &CoverTarget, seed: u64| -> (Vec<f64>, Vec<f64>) {
        (0..reps)
            .map(|i| {
                let r = run_cover_seeded(t, key(seed, i), DEFAULT_MAX_LINES).unwrap();
                (r.t_d, r.t_w)
            })
            .unzip()
    };
    let (ad, aw) = run(&tight, 1);
    let (bd, bw) = run(&wide, 2);
    let ks_d = ks_two_sample(&Ecdf::new(ad).unwrap(), &Ecdf::new(bd).unwrap());
    let ks_w = ks_two_sample(&Ecdf::new(aw).unwrap(), &Ecdf::new(bw).unwrap());
    assert!(ks_d < 0.02, "t_d KS {ks_d}");
    assert!(ks_w < 0.02, "t_w KS {ks_w}");
}

#[test]
fn bracket_never_empty() {
    let spec = GeometrySpec::unit_cube(2);
    let rhos = [0.4, 0.2, 0.1];
    for rep in 0..1000 {
        let b = bracket_cover_time(&spec, &rhos, DEFAULT_K, key(3, rep), DEFAULT_MAX_LINES).unwrap();
        assert!(!b.is_empty(), "rep {rep}: {} > {}", b.lower, b.upper);
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    Ecdf::new(v).unwrap().quantile(0.5)
}

#[test]
fn bracket_narrows_with_rho() {
    let spec = GeometrySpec::unit_cube(2);
    let (coarse, fine): (Vec<f64>, Vec<f64>) = (0..200)
        .map(|rep| {
            let b = bracket_cover_time(&spec, &[0.4, 0.05], DEFAULT_K, key(4, rep), DEFAULT_MAX_LINES).unwrap();
            let w = |i: usize| b.per_rho[i].t_w - b.per_rho[i].t_d;
            (w(0), w(1))
        })
        .unzip();
    let (c, f) = (median(coarse), median(fine));
    assert!(f < c, "median width at 0.05 is {f}, at 0.4 is {c}");
}

#[test]
fn one_point_t_d_free_of_rho() {
    let spec = GeometrySpec::Points(vec![vec![0.3, -1.0, 2.0]]);
    for rep in 0..50 {
        let b = bracket_cover_time(&spec, &[0.5, 0.3, 0.1], DEFAULT_K, key(5, rep), DEFAULT_MAX_LINES).unwrap();
        assert!(b.per_rho.iter().all(|e| e.t_d == b.per_rho[0].t_d));
    }
}
