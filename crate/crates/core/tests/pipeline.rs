//! Library-level checks across modules on a mid-size grid.

use std::sync::OnceLock;

use hypframes::besov::{besov_norm_bestapprox, besov_norm_lp, BesovParams, Exponent};
use hypframes::fields::{dilation_family, random_pw_fields};
use hypframes::filters::FilterBank;
use hypframes::frames::{Frame, FrameParams};
use hypframes::geometry::SpatialGrid;
use hypframes::hft::{Hft, SpectralGrid};
use hypframes::spectral::{l2_norm, project_pw};

fn hft() -> &'static Hft {
    static H: OnceLock<Hft> = OnceLock::new();
    H.get_or_init(|| {
        Hft::calibrated(
            SpatialGrid::new(6.0, 128, 128).unwrap(),
            SpectralGrid::new(20.0, 160, 128).unwrap(),
        )
        .unwrap()
    })
}

#[test]
fn dilation_steps_approach_two_to_the_alpha() {
    let h = hft();
    let bank = FilterBank::new(3).unwrap();
    let fam = dilation_family(h, 5, 8.0, 3).unwrap();
    for alpha in [0.5, 1.0] {
        let p = BesovParams::new(alpha, Exponent::Two, 3).unwrap();
        let lp: Vec<f64> = fam.iter().map(|f| besov_norm_lp(h, f, &p, &bank).unwrap()).collect();
        let ba: Vec<f64> = fam.iter().map(|f| besov_norm_bestapprox(h, f, &p)).collect();
        let target = 2f64.powf(alpha);
        for norms in [&lp, &ba] {
            let steps: Vec<f64> = norms.windows(2).map(|w| w[1] / w[0]).collect();
            // low members share band 0, so growth only kicks in higher up
            assert!(steps.windows(2).all(|w| w[1] >= w[0]), "{steps:?}");
            let last = *steps.last().unwrap();
            assert!(last > 0.75 * target && last < 1.25 * target, "α={alpha} {steps:?}");
        }
    }
}

#[test]
fn frame_analysis_is_band_limited_and_stable() {
    let h = hft();
    let params = FrameParams {
        delta: 0.5,
        a0: 1.0,
        j_max: 3,
        lambda_pu: 1.0,
        seed: 4,
    };
    let fr = Frame::build(h, &params).unwrap();
    for f in random_pw_fields(h, 4, 0.0, 8.0, 11).unwrap() {
        let c = fr.analyze(h, &f, "f");
        let ratio = c.energy() / l2_norm(h, &f).powi(2);
        assert!((0.45..=1.55).contains(&ratio), "{ratio}");
        // synthesis stays inside PW_{2^{J+1}}
        let s = fr.synthesize(h, &c);
        let kept = project_pw(h, 2.0 * fr.omega(), &s).unwrap();
        assert!(l2_norm(h, &s) > 0.5);
        assert!((l2_norm(h, &kept) / l2_norm(h, &s) - 1.0).abs() < 1e-12);
    }
}
