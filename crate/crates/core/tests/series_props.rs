use proptest::prelude::*;
use revheat::quad::integrate;
use revheat::series::{
    divided_difference_series, singular_integral_expansion, TruncSeries1, TruncSeries2,
};

const ORDER: usize = 6;

fn series() -> impl Strategy<Value = TruncSeries1> {
    prop::collection::vec(-2.0f64..2.0, ORDER + 1).prop_map(|c| TruncSeries1::new(c, ORDER))
}

fn close(a: &TruncSeries1, b: &TruncSeries1, tol: f64) -> bool {
    (0..=ORDER).all(|k| (a.coeff(k) - b.coeff(k)).abs() <= tol * (1.0 + a.coeff(k).abs()))
}

proptest! {
    #[test]
    fn multiplication_is_associative(a in series(), b in series(), c in series()) {
        let left = a.mul(&b).mul(&c);
        let right = a.mul(&b.mul(&c));
        prop_assert!(close(&left, &right, 1e-12));
    }

    #[test]
    fn square_root_squares_back(mut a in series(), lead in 0.5f64..3.0) {
        let mut c = a.coeffs().to_vec();
        c[0] = lead;
        a = TruncSeries1::new(c, ORDER);
        let r = a.sqrt().unwrap();
        prop_assert!(close(&r.mul(&r), &a, 1e-11));
    }

    #[test]
    fn reciprocal_inverts(mut a in series(), lead in 0.5f64..3.0) {
        let mut c = a.coeffs().to_vec();
        c[0] = lead;
        a = TruncSeries1::new(c, ORDER);
        let one = a.mul(&a.reciprocal().unwrap());
        prop_assert!(close(&one, &TruncSeries1::constant(1.0, ORDER), 1e-11));
    }

    #[test]
    fn divided_difference_identity(g in series(), x in -0.5f64..0.5, y in -0.5f64..0.5) {
        prop_assume!((x - y).abs() > 1e-3);
        let f = divided_difference_series(&g);
        let lhs = f.eval(x, y) * (x - y);
        let rhs = g.eval(x) - g.eval(y);
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn singular_integral_matches_quadrature(
        terms in prop::collection::vec(-1.0f64..1.0, 10),
        y in 0.05f64..0.4,
    ) {
        let order = 3;
        let mut f = TruncSeries2::zero(order);
        let mut it = terms.iter();
        for i in 0..=order {
            for j in 0..=order - i {
                f.set(i, j, *it.next().unwrap());
            }
        }
        let series = singular_integral_expansion(&f).eval(y);
        // x = y sin τ removes the endpoint singularity
        let quad = integrate(|tau: f64| f.eval(y * tau.sin(), y), 0.0, std::f64::consts::FRAC_PI_2, 1e-14).value;
        prop_assert!((series - quad).abs() < 1e-12, "{series} vs {quad}");
    }
}
