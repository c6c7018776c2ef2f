use std::collections::BTreeMap;

use gmdgrid::case::{AcBranch, Bus, BusType, CaseData, Generator};
use gmdgrid::coupling::{ac_power_flow, current_base, qloss, reactive_loss, sequential_gic_ac, QLossMap};
use gmdgrid::fixtures;
use gmdgrid::gic::{solve_gic, FieldInput};

fn two_bus(r: f64, x: f64, p: f64, q: f64) -> CaseData {
    let bus = |id, bus_type, pd, qd| Bus {
        id,
        bus_type,
        pd,
        qd,
        gs: 0.0,
        bs: 0.0,
        base_kv: 230.0,
        vmin: 0.9,
        vmax: 1.1,
    };
    let mut case = CaseData::empty("two_bus", 100.0);
    case.buses = vec![bus(1, BusType::Slack, 0.0, 0.0), bus(2, BusType::PQ, p, q)];
    case.generators = vec![Generator {
        index: 1,
        gen_bus: 1,
        pg: p,
        vg: 1.0,
        pmin: 0.0,
        pmax: 10.0,
        qmin: -10.0,
        qmax: 10.0,
        c0: 0.0,
        c1: 1.0,
        c2: 0.0,
        gen_status: true,
    }];
    case.branches = vec![AcBranch {
        index: 1,
        f_bus: 1,
        t_bus: 2,
        br_r: r,
        br_x: x,
        br_b: 0.0,
        tap: 1.0,
        rate_a: 10.0,
        angle_lim: 1.0,
        angle_bigm: 3.0,
        switchable: false,
        br_status: true,
        ckt: 1,
    }];
    CaseData::from_tables(case).unwrap()
}

#[test]
fn two_bus_voltage_matches_the_closed_form() {
    for (r, x, p, q) in [(0.01, 0.1, 1.0, 0.5), (0.02, 0.05, 2.0, -0.3), (0.0, 0.2, 0.5, 0.5)] {
        let sol = ac_power_flow(&two_bus(r, x, p, q), &QLossMap::default()).unwrap();
        // V⁴ + (2(PR + QX) − 1)V² + (P² + Q²)(R² + X²) = 0, high-voltage root
        let b = 2.0 * (p * r + q * x) - 1.0;
        let c = (p * p + q * q) * (r * r + x * x);
        let v = ((-b + (b * b - 4.0 * c).sqrt()) / 2.0).sqrt();
        assert!((sol.vm[&2] - v).abs() < 1e-8, "{} vs {v}", sol.vm[&2]);
        // losses: |I|² R with |I| = |S| / V
        let loss = (p * p + q * q) / (v * v) * r;
        assert!((sol.gen_p[&1] - p - loss).abs() < 1e-8);
    }
}

#[test]
fn loss_constant_in_si_units() {
    // 1.793 × (106.68 A over the 100 MVA, 500 kV peak phase current base)
    let base = 2f64.sqrt() * 100e6 / (3f64.sqrt() * 500e3);
    assert!((current_base(100.0, 500.0) - base).abs() < 1e-9);
    let dq = reactive_loss(1.793, 1.0, 106.68, 100.0, 500.0, 100.0);
    assert!((dq - 1.793 * 106.68 / base).abs() < 1e-12);
    // linear in voltage; the rating cancels between the current base and the power scaling
    assert!((reactive_loss(1.793, 0.95, 106.68, 100.0, 500.0, 100.0) - 0.95 * dq).abs() < 1e-12);
    assert!((reactive_loss(1.793, 1.0, 106.68, 250.0, 500.0, 100.0) - dq).abs() < 1e-12);
}

fn without_losses(case: &CaseData) -> CaseData {
    let mut c = case.clone();
    for row in &mut c.branch_gmd {
        if row.gmd_k.is_some() {
            row.gmd_k = Some(0.0);
        }
    }
    c
}

#[test]
fn zero_loss_factors_reproduce_plain_power_flow() {
    let case = without_losses(&fixtures::b4gic());
    let plain = ac_power_flow(&case, &QLossMap::default()).unwrap();
    let (_, losses, coupled) = sequential_gic_ac(&case, &FieldInput::uniform(3.2, 90.0), None).unwrap();
    assert_eq!(losses.total(), 0.0);
    for (bus, v) in &plain.vm {
        assert!((coupled.vm[bus] - v).abs() < 1e-8);
        assert!((coupled.va[bus] - plain.va[bus]).abs() < 1e-8);
    }
}

#[test]
fn generators_supply_at_least_the_transformer_losses() {
    let case = fixtures::b4gic();
    let plain = ac_power_flow(&case, &QLossMap::default()).unwrap();
    for e in [0.5, 1.0, 3.2] {
        let (_, losses, coupled) = sequential_gic_ac(&case, &FieldInput::uniform(e, 90.0), None).unwrap();
        let dq = coupled.total_q_gen() - plain.total_q_gen();
        assert!(losses.total() > 0.0);
        assert!(dq >= losses.total() - 1e-9, "{dq} < {}", losses.total());
    }
}

#[test]
fn stronger_fields_draw_more_reactive_power() {
    let case = fixtures::b4gic();
    let q = |e: f64| sequential_gic_ac(&case, &FieldInput::uniform(e, 90.0), None).unwrap().2.total_q_gen();
    assert!(q(3.2) > q(1.0));
    let v = |e: f64| sequential_gic_ac(&case, &FieldInput::uniform(e, 90.0), None).unwrap().2.vm[&4];
    assert!(v(3.2) < v(1.0));
}

#[test]
fn losses_attach_to_the_high_side_at_the_solved_voltage() {
    let case = fixtures::b4gic();
    let gic = solve_gic::<f64>(&case, &FieldInput::uniform(1.0, 90.0), None).unwrap();
    let v = BTreeMap::from([(1, 0.9), (2, 1.05)]);
    let losses = qloss(&case, &gic, &v);
    let at1 = reactive_loss(1.793, 0.9, gic.effective[&1], 100.0, 500.0, 100.0);
    assert!((losses.at_bus(1) - at1).abs() < 1e-12);
    assert!((losses.entries[&3].d_q - reactive_loss(1.793, 1.05, gic.effective[&3], 100.0, 500.0, 100.0)).abs() < 1e-12);
    assert_eq!(losses.at_bus(3), 0.0);
}
