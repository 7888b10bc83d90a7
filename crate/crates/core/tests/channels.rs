use num_complex::Complex64;
use ris_secrecy::channel::{draw_channels, path_loss, trial_rng, PathLossModel};
use ris_secrecy::scenario::{derive_geometry, validate, Scenario};

const DRAWS: u64 = 100_000;

fn one_element() -> ris_secrecy::scenario::ValidatedScenario {
    let mut s = Scenario::baseline();
    s.ris.n_elements = 1;
    validate(s).unwrap()
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn mean_power_matches_path_loss() {
    let s = one_element();
    let geo = derive_geometry(&s.topology);
    let model = PathLossModel::from_radio(&s.radio);
    let draws: Vec<_> = (0..DRAWS)
        .map(|t| draw_channels(&s, &mut trial_rng(11, 0, t)))
        .collect();

    let g: Vec<f64> = draws.iter().map(|c| c.g[0].norm_sqr()).collect();
    let (m, se) = mean_and_se(&g);
    let expect = path_loss(&model, geo.d_ris_rx).unwrap();
    assert!((expect - 3.536e-7).abs() < 1e-10);
    assert!((m - expect).abs() <= 3.0 * se, "{m} vs {expect} (se {se})");

    for (pick, d) in [(0usize, geo.d_t_ris), (2, geo.d_ris_ev)] {
        let xs: Vec<f64> = draws
            .iter()
            .map(|c| if pick == 0 { c.h[0] } else { c.k[0] }.norm_sqr())
            .collect();
        let (m, se) = mean_and_se(&xs);
        let expect = path_loss(&model, d).unwrap();
        assert!((m - expect).abs() <= 3.0 * se, "{m} vs {expect} (se {se})");
    }
}

#[test]
fn real_parts_uncorrelated() {
    let s = one_element();
    let pairs: Vec<(f64, f64)> = (0..DRAWS)
        .map(|t| {
            let c = draw_channels(&s, &mut trial_rng(12, 0, t));
            (c.h[0].re, c.g[0].re)
        })
        .collect();
    let n = pairs.len() as f64;
    let (mx, my) = (
        pairs.iter().map(|p| p.0).sum::<f64>() / n,
        pairs.iter().map(|p| p.1).sum::<f64>() / n,
    );
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = pairs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r = sxy / (sxx * syy).sqrt();
    // standard error of r under independence is about 1/sqrt(n)
    assert!(r.abs() <= 3.0 / n.sqrt(), "r = {r}");
}

#[test]
fn real_and_imaginary_halves() {
    let s = one_element();
    let z: Vec<Complex64> = (0..DRAWS)
        .map(|t| draw_channels(&s, &mut trial_rng(13, 0, t)).g[0])
        .collect();
    let re: Vec<f64> = z.iter().map(|c| c.re * c.re).collect();
    let im: Vec<f64> = z.iter().map(|c| c.im * c.im).collect();
    let (mr, ser) = mean_and_se(&re);
    let (mi, sei) = mean_and_se(&im);
    assert!((mr - mi).abs() <= 3.0 * (ser * ser + sei * sei).sqrt());
}
