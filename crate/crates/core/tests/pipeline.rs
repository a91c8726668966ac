use invertkit::data::{synth, Sampling, SignalTable};
use invertkit::gp::{evolve, GpConfig};
use invertkit::psi::{invert, InversionProblem, PsiConfig};
use invertkit::{ExprVector, IntervalBox, Paving};

const WAVELET: &str = "(* (sin (* 5 x)) (exp (neg (* x x))))";

fn invert_on_r(model: ExprVector) -> Paving {
    let problem = InversionProblem::new(
        model,
        IntervalBox::from_bounds(&[(-2.0, 2.0)]).unwrap(),
        IntervalBox::from_bounds(&[(-0.25, 0.5)]).unwrap(),
    )
    .unwrap();
    invert(&problem, &PsiConfig::with_width(1e-3, 1)).unwrap()
}

#[test]
fn learned_model_inverts_like_the_generator() {
    let generator = ExprVector::parse(WAVELET, 1).unwrap();
    let region = IntervalBox::from_bounds(&[(-3.0, 3.0)]).unwrap();
    let table = synth(&generator, &region, 601, 0.0, 0, Sampling::Grid).unwrap();
    // Round-trip through CSV text, as the command-line tool does.
    let table = SignalTable::from_csv_str(&table.to_csv_string(), None).unwrap();

    let config = GpConfig { seed: 6, ..GpConfig::default() };
    let run = evolve(&table.dataset(0).unwrap(), &config).unwrap();
    let learned = ExprVector::scalar(1, run.best.expr).unwrap();

    let xs: Vec<f64> = (0..=4000).map(|i| -2.0 + 1e-3 * i as f64).collect();
    let sup = xs
        .iter()
        .map(|&x| (learned.eval(&[x]).unwrap().unwrap()[0] - generator.eval(&[x]).unwrap().unwrap()[0]).abs())
        .fold(0.0, f64::max);
    assert!(sup <= 0.01, "regression too far from the generator: {sup}");

    let (a, b) = (invert_on_r(learned), invert_on_r(generator));
    let (ia, ib) = (a.index(), b.index());
    let agree = xs.iter().filter(|&&x| ia.membership(&[x]) == ib.membership(&[x])).count();
    assert!(agree as f64 >= 0.99 * xs.len() as f64, "{agree}/{} probes agree", xs.len());
}

#[test]
fn decimated_noisy_data_still_carries_the_signal() {
    let generator = ExprVector::parse(WAVELET, 1).unwrap();
    let region = IntervalBox::from_bounds(&[(-3.0, 3.0)]).unwrap();
    let noisy = synth(&generator, &region, 601, 0.25, 3, Sampling::Grid).unwrap();
    let kept = noisy.decimate(10).unwrap();
    assert_eq!(kept.rows().len(), 61);
    for row in kept.rows() {
        let clean = generator.eval(&row[..1]).unwrap().unwrap()[0];
        assert!((row[1] - clean).abs() <= 0.25);
    }
}
