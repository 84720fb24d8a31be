use proptest::prelude::*;
use stochad::{Error, IndicatorDiffStrategy, OpKind, RandomVariable, Tape};

const PATHWISE: IndicatorDiffStrategy = IndicatorDiffStrategy::Constant(0.0);

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.1..3.0f64, 1..40)
}

proptest! {
    #[test]
    fn gradient_of_rational_function(xs in samples(), c in 0.5..2.0f64) {
        // f = (x^2 + c x) / (1 + x), df/dx = (x^2 + 2x + c) / (1 + x)^2
        let tape = Tape::new();
        let x = tape.input(RandomVariable::from(xs.clone()));
        let num = x.mul(&x).unwrap().add(&x.mul_scalar(c).unwrap()).unwrap();
        let f = num.div(&x.add_scalar(1.0).unwrap()).unwrap();
        let adj = tape.backward(f.id(), &PATHWISE).unwrap().adjoint(x.id()).unwrap();
        for (v, a) in xs.iter().zip(adj.to_vec(xs.len())) {
            let exact = (v * v + 2.0 * v + c) / ((1.0 + v) * (1.0 + v));
            prop_assert!((a - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn gradient_of_transcendental_chain(xs in prop::collection::vec(0.5..3.0f64, 1..40)) {
        // f = sqrt(exp(x) + log(x)) - x
        let tape = Tape::new();
        let x = tape.input(RandomVariable::from(xs.clone()));
        let inner = x.exp().unwrap().add(&x.log().unwrap()).unwrap();
        let f = inner.sqrt().unwrap().sub(&x).unwrap();
        let adj = tape.backward(f.id(), &PATHWISE).unwrap().adjoint(x.id()).unwrap();
        for (v, a) in xs.iter().zip(adj.to_vec(xs.len())) {
            let s = v.exp() + v.ln();
            let exact = (v.exp() + 1.0 / v) / (2.0 * s.sqrt()) - 1.0;
            prop_assert!((a - exact).abs() <= 1e-10 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn scalar_input_derivative_is_mean_of_pathwise_adjoint(xs in samples(), s in 0.5..2.0f64) {
        let tape = Tape::new();
        let spot = tape.input(s);
        let x = tape.constant(RandomVariable::from(xs.clone()));
        let f = spot.mul(&x).unwrap().neg().unwrap().exp().unwrap();
        let result = tape.backward(f.id(), &PATHWISE).unwrap();
        let expected = RandomVariable::from(xs.iter().map(|v| -v * (-s * v).exp()).collect::<Vec<_>>());
        let d = result.derivative(spot.id()).unwrap();
        prop_assert!((d - expected.expectation()).abs() <= 1e-12 * (1.0 + d.abs()));
    }
}

#[test]
fn max_routes_adjoint_to_the_larger_argument() {
    let tape = Tape::new();
    let a = tape.input(RandomVariable::from(vec![1.0, 3.0, 2.0]));
    let b = tape.input(RandomVariable::from(vec![2.0, 1.0, 2.0]));
    let m = a.max(&b).unwrap();
    let r = tape.backward(m.id(), &PATHWISE).unwrap();
    assert_eq!(r.adjoint(a.id()).unwrap().to_vec(3), vec![0.0, 1.0, 0.0]);
    assert_eq!(r.adjoint(b.id()).unwrap().to_vec(3), vec![1.0, 0.0, 1.0]);
}

#[test]
fn nodes_outside_the_input_cone_get_no_adjoint() {
    let tape = Tape::new();
    let x = tape.input(2.0);
    let k = tape.constant(5.0);
    let y = x.mul(&k).unwrap();
    let r = tape.backward(y.id(), &PATHWISE).unwrap();
    assert_eq!(r.derivative(x.id()).unwrap(), 5.0);
    assert_eq!(r.derivative(k.id()).unwrap(), 0.0);
    assert_eq!(tape.kind(y.id()).unwrap(), OpKind::Mul);
}

#[test]
fn variables_from_another_tape_are_rejected() {
    let t1 = Tape::new();
    let t2 = Tape::new();
    let a = t1.input(1.0);
    let b = t2.input(2.0);
    assert!(matches!(a.add(&b), Err(Error::ForeignTape(_))));
    let r = t1.backward(a.id(), &PATHWISE).unwrap();
    assert!(r.adjoint(b.id()).is_err());
}

#[test]
fn projection_and_line_fit_replace_the_incoming_adjoint() {
    use stochad::Width;
    let x: Vec<f64> = (0..200).map(|i| -1.0 + i as f64 / 100.0 + 0.005).collect();
    let n = x.len() as f64;
    let smooth_part = x.iter().filter(|v| **v > 0.0).map(|v| v.exp()).sum::<f64>() / n;
    let tape = Tape::new();
    let s = tape.input(RandomVariable::from(x));
    let y = s.indicator().unwrap().mul(&s.exp().unwrap()).unwrap();
    let w = Width::Absolute(0.2);
    let delta = tape
        .backward(y.id(), &IndicatorDiffStrategy::discretized_delta(w))
        .unwrap()
        .derivative(s.id())
        .unwrap();
    let projection = tape
        .backward(y.id(), &IndicatorDiffStrategy::Projection { width: w })
        .unwrap()
        .derivative(s.id())
        .unwrap();
    // the incoming adjoint exp(x) varies across the window; the projection
    // replaces it by its window mean, which leaves the expectation unchanged
    assert!(
        (delta - projection).abs() < 1e-12,
        "{delta} vs {projection}"
    );
    let regression = tape
        .backward(
            y.id(),
            &IndicatorDiffStrategy::LinearConditionalRegression { width: w, order: 2 },
        )
        .unwrap()
        .derivative(s.id())
        .unwrap();
    // 20 grid points in the window; a line fit of exp(x) there has an
    // intercept within 2e-3 of exp(0)
    let indicator_part = regression - smooth_part;
    let window_density = 20.0 / (n * 0.2);
    assert!(
        (indicator_part / window_density - 1.0).abs() < 2e-3,
        "{indicator_part}"
    );
}
