//! Cost kernels against an independent quadrature oracle and their
//! structural identities.

use std::num::NonZeroUsize;

use eol_core::costkernel::{
    build_kernel_table, constant_a, holding_cost, one_period_cost, order_cost, reformulated_cost,
    replacement_cost, stopping_cost, CostParameters, LostSalesConvention,
};
use eol_core::demand::{IntensityKind, IntensityModel};
use eol_core::poisson::expected_positive_part;
use gauss_quad::legendre::GaussLegendre;
use statrs::distribution::{Discrete, DiscreteCDF, Poisson};

/// Composite Gauss-Legendre on [a, b]: 40 pieces of 20 nodes.
fn integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(20).unwrap());
    let pieces = 40;
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|p| rule.integrate(a + p as f64 * w, a + (p + 1) as f64 * w, &f))
        .sum()
}

fn poisson_pmf(n: u64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    Poisson::new(mu).unwrap().pmf(n)
}

fn poisson_cdf(n: u64, mu: f64) -> f64 {
    if mu <= 0.0 {
        return 1.0;
    }
    Poisson::new(mu).unwrap().cdf(n)
}

/// P{N ≥ n}.
fn at_least(n: u64, mu: f64) -> f64 {
    if n == 0 {
        1.0
    } else {
        1.0 - poisson_cdf(n - 1, mu)
    }
}

fn positive_part_direct(x: usize, mu: f64) -> f64 {
    (0..x).map(|n| (x - n) as f64 * poisson_pmf(n as u64, mu)).sum()
}

struct Oracle<'a> {
    p: &'a CostParameters,
    m: &'a IntensityModel,
}

impl Oracle<'_> {
    fn lambda(&self, k: usize) -> f64 {
        self.m.rates()[k]
    }

    fn holding(&self, k: usize, x: usize) -> f64 {
        let l = self.lambda(k);
        self.p.c1 * integrate(0.0, 1.0, |s| (-self.p.delta * s).exp() * positive_part_direct(x, l * s))
    }

    fn replacement(&self, k: usize, x: usize, conv: LostSalesConvention) -> f64 {
        let l = self.lambda(k);
        // An arrival at k + s is lost when at least `lost_from` units were
        // demanded earlier in the period.
        let lost_from = match conv {
            LostSalesConvention::Arrival => x as u64,
            LostSalesConvention::Paper => x as u64 + 1,
        };
        integrate(0.0, 1.0, |s| {
            (-self.p.delta * s).exp() * self.p.c2(k as f64 + s) * l * at_least(lost_from, l * s)
        })
    }

    fn outside(&self, k: usize) -> f64 {
        let l = self.lambda(k);
        integrate(0.0, 1.0, |s| (-self.p.delta * s).exp() * self.p.c3(k as f64 + s) * l)
    }

    fn stopping(&self, k: usize, x: usize) -> f64 {
        let tail: f64 = (k..self.m.horizon())
            .map(|j| (-self.p.delta * (j - k) as f64).exp() * self.outside(j))
            .sum();
        self.p.c4 * x as f64 + tail
    }
}

fn close(got: f64, want: f64, rel: f64) -> bool {
    (got - want).abs() <= rel * want.abs().max(1e-3)
}

fn instances() -> Vec<(CostParameters, IntensityModel)> {
    let base = CostParameters::base_case();
    let undiscounted = CostParameters {
        delta: 0.0,
        gamma: 0.0,
        ..base
    };
    let salvage = CostParameters {
        c4: -25.0,
        gamma: 0.2,
        delta: 0.05,
        c1: 3.0,
        ..base
    };
    let convex = IntensityModel::named(IntensityKind::Convex, 50, 500.0).unwrap();
    let custom = IntensityModel::from_rates(vec![2.0, 0.0, 37.5, 0.3, 11.0]).unwrap();
    vec![(base, convex.clone()), (undiscounted, custom.clone()), (salvage, custom), (salvage, convex)]
}

const XS: [usize; 9] = [0, 1, 2, 3, 7, 20, 45, 80, 160];

#[test]
fn closed_forms_match_quadrature() {
    for (p, m) in instances() {
        let o = Oracle { p: &p, m: &m };
        for k in [0, 1, 2, 4] {
            for x in XS {
                let h = holding_cost(&p, &m, k, x).unwrap();
                assert!(close(h, o.holding(k, x), 1e-9), "H({k},{x}) = {h} vs {}", o.holding(k, x));
                for conv in [LostSalesConvention::Arrival, LostSalesConvention::Paper] {
                    let l = replacement_cost(&p, &m, conv, k, x).unwrap();
                    let want = o.replacement(k, x, conv);
                    // Far tails of L are compared on the scale of L(k, 0).
                    let scale = o.replacement(k, 0, conv).max(1e-3);
                    assert!((l - want).abs() <= 1e-9 * scale, "L({k},{x},{conv:?}) = {l} vs {want}");
                    let c = one_period_cost(&p, &m, conv, k, x).unwrap();
                    assert_eq!(c, h + l);
                }
                let ct = reformulated_cost(&p, &m, LostSalesConvention::Arrival, k, x).unwrap();
                let want = o.holding(k, x) + o.replacement(k, x, LostSalesConvention::Arrival) - o.outside(k);
                assert!((ct - want).abs() <= 1e-9 * o.replacement(k, 0, LostSalesConvention::Arrival).max(1.0));
            }
            let s = stopping_cost(&p, &m, k, 13).unwrap();
            assert!(close(s, o.stopping(k, 13), 1e-9));
        }
        assert!(close(constant_a(&p, &m), o.stopping(0, 0), 1e-9));
    }
}

#[test]
fn table_matches_direct_evaluation() {
    for (p, m) in instances() {
        for conv in [LostSalesConvention::Arrival, LostSalesConvention::Paper] {
            let table = build_kernel_table(&p, &m, conv, 200).unwrap();
            for k in 0..m.horizon().min(6) {
                for x in [0, 1, 5, 33, 99, 200] {
                    let pairs = [
                        (table.holding(k, x).unwrap(), holding_cost(&p, &m, k, x).unwrap()),
                        (table.replacement(k, x).unwrap(), replacement_cost(&p, &m, conv, k, x).unwrap()),
                        (table.one_period(k, x).unwrap(), one_period_cost(&p, &m, conv, k, x).unwrap()),
                        (table.reformulated(k, x).unwrap(), reformulated_cost(&p, &m, conv, k, x).unwrap()),
                        (table.stopping(k, x).unwrap(), stopping_cost(&p, &m, k, x).unwrap()),
                    ];
                    // The direct L subtracts the satisfied part from the period
                    // total, so it carries cancellation error on the scale of L(k, 0).
                    let row = table.replacement(k, 0).unwrap().max(1.0);
                    for (a, b) in pairs {
                        assert!((a - b).abs() <= 1e-12 * b.abs().max(row), "k={k} x={x}: {a} vs {b}");
                    }
                }
            }
            assert!((table.a() - constant_a(&p, &m)).abs() < 1e-9);
            assert!(table.holding(0, 201).is_err());
            assert!(table.holding(m.horizon(), 0).is_err());
        }
    }
}

#[test]
fn zero_cap_table_holds_only_empty_stock() {
    let p = CostParameters::base_case();
    let m = IntensityModel::from_rates(vec![4.0, 1.0]).unwrap();
    let table = build_kernel_table(&p, &m, LostSalesConvention::Arrival, 0).unwrap();
    assert_eq!(table.x_max(), 0);
    for k in 0..2 {
        assert_eq!(table.holding(k, 0).unwrap(), 0.0);
        let l = replacement_cost(&p, &m, LostSalesConvention::Arrival, k, 0).unwrap();
        assert!((table.replacement(k, 0).unwrap() - l).abs() < 1e-12 * l);
        assert!(table.holding(k, 1).is_err());
    }
}

#[test]
fn monotone_in_stock_and_vanishing_shortage() {
    let p = CostParameters::base_case();
    let m = IntensityModel::named(IntensityKind::Convex, 50, 500.0).unwrap();
    let x_max = 1200;
    let table = build_kernel_table(&p, &m, LostSalesConvention::Arrival, x_max).unwrap();
    for k in 0..50 {
        assert_eq!(table.holding(k, 0).unwrap(), 0.0);
        for x in 0..x_max {
            let (h0, h1) = (table.holding(k, x).unwrap(), table.holding(k, x + 1).unwrap());
            let (l0, l1) = (table.replacement(k, x).unwrap(), table.replacement(k, x + 1).unwrap());
            assert!(h1 >= h0 && h0 >= 0.0, "H not nondecreasing at ({k},{x})");
            assert!(l1 <= l0 && l1 >= 0.0, "L not nonincreasing at ({k},{x})");
            let c = table.one_period(k, x).unwrap();
            assert_eq!(c, h0 + l0);
        }
        assert!(table.replacement(k, x_max).unwrap() < 1e-6 * table.replacement(k, 0).unwrap());
    }
}

#[test]
fn tail_sum_identity() {
    for mu in [0.0, 0.3, 2.0, 7.5, 19.0] {
        for x in 0..=20usize {
            let tail_sum: f64 = (0..x).map(|n| poisson_cdf(n as u64, mu)).sum();
            let direct = positive_part_direct(x, mu);
            assert!((tail_sum - direct).abs() < 1e-12 * direct.max(1.0));
            assert!((expected_positive_part(x, mu) - direct).abs() < 1e-12 * direct.max(1.0));
        }
    }
}

#[test]
fn reformulation_shift_is_the_outside_source_integral() {
    for (p, m) in instances() {
        let o = Oracle { p: &p, m: &m };
        let table = build_kernel_table(&p, &m, LostSalesConvention::Arrival, 300).unwrap();
        for k in 0..m.horizon().min(5) {
            let shift = o.outside(k);
            for x in 0..=300 {
                let gap = table.one_period(k, x).unwrap() - table.reformulated(k, x).unwrap();
                assert!((gap - shift).abs() < 1e-9 * shift.max(1.0), "k={k} x={x}: {gap} vs {shift}");
            }
        }
    }
}

#[test]
fn paper_convention_counts_one_more_satisfied_arrival() {
    let p = CostParameters::base_case();
    let m = IntensityModel::from_rates(vec![6.0]).unwrap();
    let arrival = build_kernel_table(&p, &m, LostSalesConvention::Arrival, 40).unwrap();
    let paper = build_kernel_table(&p, &m, LostSalesConvention::Paper, 40).unwrap();
    for x in 0..40 {
        let l_paper = paper.replacement(0, x).unwrap();
        assert!(l_paper < arrival.replacement(0, x).unwrap());
        assert!((l_paper - arrival.replacement(0, x + 1).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn worked_examples() {
    let unit = CostParameters {
        c1: 1.0,
        delta: 0.0,
        gamma: 0.0,
        ..CostParameters::base_case()
    };
    let two = IntensityModel::from_rates(vec![2.0]).unwrap();
    let still = IntensityModel::from_rates(vec![0.0]).unwrap();

    assert_eq!(order_cost(&unit, 0), 0.0);
    assert_eq!(order_cost(&unit.with_setup_cost(1000.0), 5), 1500.0);
    assert_eq!(order_cost(&unit, 1), 100.0);

    let h = holding_cost(&unit, &two, 0, 1).unwrap();
    assert!((h - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-12);
    assert!((holding_cost(&unit, &still, 0, 3).unwrap() - 3.0).abs() < 1e-12);
    assert_eq!(holding_cost(&unit, &two, 0, 0).unwrap(), 0.0);

    let free = CostParameters {
        c2_bar: 0.0,
        c3_bar: 0.0,
        ..unit
    };
    for x in [0, 1, 4] {
        assert_eq!(replacement_cost(&free, &two, LostSalesConvention::Arrival, 0, x).unwrap(), 0.0);
        assert_eq!(replacement_cost(&free, &two, LostSalesConvention::Paper, 0, x).unwrap(), 0.0);
    }
    assert_eq!(one_period_cost(&free, &two, LostSalesConvention::Arrival, 0, 0).unwrap(), 0.0);

    let per_unit = CostParameters {
        c2_bar: 1.0,
        c3_bar: 0.0,
        ..unit
    };
    let l = replacement_cost(&per_unit, &two, LostSalesConvention::Arrival, 0, 0).unwrap();
    assert!((l - 2.0).abs() < 1e-12);

    let no_premium = CostParameters { c2_bar: 0.0, ..unit };
    assert!(reformulated_cost(&no_premium, &two, LostSalesConvention::Arrival, 0, 0).unwrap().abs() < 1e-12);

    let m = IntensityModel::named(IntensityKind::Constant, 50, 500.0).unwrap();
    let base = CostParameters::base_case();
    assert!((stopping_cost(&base, &m, 50, 10).unwrap() - 250.0).abs() < 1e-12);
    let no_outside = CostParameters { c3_bar: 0.0, ..base };
    assert!((stopping_cost(&no_outside, &m, 3, 7).unwrap() - 175.0).abs() < 1e-12);
    assert_eq!(constant_a(&no_outside, &m), 0.0);
    let s = stopping_cost(&unit, &m, 0, 4).unwrap();
    assert!((s - (unit.c4 * 4.0 + 200.0 * 500.0)).abs() < 1e-8);
    assert!((constant_a(&unit, &m) - 100000.0).abs() < 1e-8);
    assert!(stopping_cost(&base, &m, 51, 0).is_err());
}

#[test]
fn base_case_first_period_reformulated_cost() {
    let p = CostParameters::base_case();
    let m = IntensityModel::named(IntensityKind::Convex, 50, 500.0).unwrap();
    let l0 = m.rates()[0];
    // With x = 0 every arrival is lost; what remains after the outside-source
    // share is the premium c̄₂ = 200.
    let want = integrate(0.0, 1.0, |u| (-0.005 * u).exp() * 200.0 * l0);
    let got = reformulated_cost(&p, &m, LostSalesConvention::Arrival, 0, 0).unwrap();
    assert!(close(got, want, 1e-10));
}
