use std::collections::BTreeMap;

use gmdgrid::case::{CaseData, WindingConfig};
use gmdgrid::fixtures;
use gmdgrid::gic::{solve_gic, FieldInput};
use gmdgrid::synth::random_dc_case;
use gmdgrid::{parse_case, serialize_case, FieldAt};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Geodetic kilometres per degree, written out separately from the library.
fn displacement(case: &CaseData, from: usize, to: usize) -> (f64, f64) {
    let coord = |node: usize| {
        let parent = case.gmd_buses.iter().find(|b| b.index == node).unwrap().parent;
        let c = case.bus_gmd.iter().find(|c| c.bus == parent).unwrap();
        (c.lat, c.lon)
    };
    let (a, b) = (coord(from), coord(to));
    let mean = (0.5 * (a.0 + b.0)).to_radians();
    let km_n = 111.133 - 0.56 * (2.0 * mean).cos();
    let km_e = (111.5065 - 0.1872 * (2.0 * mean).cos()) * mean.cos();
    (km_n * (b.0 - a.0), km_e * (b.1 - a.1))
}

/// Nodal analysis by pseudo-inverse: floating components are handled by
/// the least-norm solution, which leaves branch currents unchanged.
fn oracle_currents(case: &CaseData, north: f64, east: f64) -> BTreeMap<usize, f64> {
    let ids: Vec<usize> = case.gmd_buses.iter().map(|b| b.index).collect();
    let pos = |id: usize| ids.iter().position(|&x| x == id).unwrap();
    let n = ids.len();
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut j = nalgebra::DVector::<f64>::zeros(n);
    for b in &case.gmd_buses {
        g[(pos(b.index), pos(b.index))] += b.g_gnd;
    }
    let mut emf = BTreeMap::new();
    for br in &case.gmd_branches {
        let xf = case.branch_gmd.iter().any(|r| r.branch == br.parent && r.is_transformer());
        let v = if xf {
            0.0
        } else {
            let (ln, le) = displacement(case, br.f_bus, br.t_bus);
            north * ln + east * le
        };
        emf.insert(br.index, v);
        let (f, t, a) = (pos(br.f_bus), pos(br.t_bus), 1.0 / br.br_r);
        g[(f, f)] += a;
        g[(t, t)] += a;
        g[(f, t)] -= a;
        g[(t, f)] -= a;
        j[f] -= a * v;
        j[t] += a * v;
    }
    let eps = 1e-10 * g.norm();
    let v = g.pseudo_inverse(eps).unwrap() * j;
    case.gmd_branches
        .iter()
        .map(|br| {
            let i = (v[pos(br.f_bus)] - v[pos(br.t_bus)] + emf[&br.index]) / br.br_r;
            (br.index, i)
        })
        .collect()
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-12)
}

fn max_abs(m: &BTreeMap<usize, f64>) -> f64 {
    m.values().fold(0.0, |a, v| a.max(v.abs()))
}

#[test]
fn b4gic_loop_current_matches_mesh_analysis() {
    let case = fixtures::b4gic();
    let sol = solve_gic::<f64>(&case, &FieldInput::uniform(1.0, 90.0), None).unwrap();
    let (_, le) = displacement(&case, 3, 4);
    // loop: 0.2 Ω grounding at each end, two windings and the line
    let expected = le / (0.2 + 0.1 + 1.001 + 0.1 + 0.2);
    for id in [1, 2, 3] {
        let i = sol.branch_currents[&id].abs();
        assert!(rel(i, expected, expected) < 1e-9, "branch {id}: {i} vs {expected}");
    }
    assert!((expected - 106.68).abs() < 0.01);
    for id in [1, 3] {
        assert!(rel(sol.effective[&id], expected, expected) < 1e-9);
    }
}

#[test]
fn northward_field_induces_nothing_on_an_east_west_line() {
    let case = fixtures::b4gic();
    let sol = solve_gic::<f64>(&case, &FieldInput::uniform(1.0, 0.0), None).unwrap();
    assert!(max_abs(&sol.branch_currents) < 1e-9);
}

#[test]
fn random_networks_match_pseudo_inverse_oracle() {
    let mut rng = StdRng::seed_from_u64(99);
    for trial in 0..100 {
        let case = random_dc_case(&mut rng, 30);
        let field = FieldAt::from_components(1.3, -2.1);
        let sol = solve_gic::<f64>(&case, &FieldInput::Field(field), None).unwrap();
        let want = oracle_currents(&case, 1.3, -2.1);
        // relative above 1 A, absolute below
        let scale = max_abs(&want).max(1.0);
        for (id, &i) in &want {
            let got = sol.branch_currents[id];
            assert!(rel(got, i, scale) < 1e-8, "trial {trial} branch {id}: {got} vs {i} scale {scale}");
        }
    }
}

/// Effective current written out per configuration from its definition.
fn oracle_effective(case: &CaseData, currents: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let cur = |id: Option<usize>| id.map(|i| currents[&i]).unwrap_or(0.0);
    let kv = |bus: usize| case.buses.iter().find(|b| b.id == bus).unwrap().base_kv;
    case.branch_gmd
        .iter()
        .filter(|r| r.is_transformer())
        .map(|r| {
            let ratio = kv(r.hi_bus) / kv(r.lo_bus);
            let v = match r.config {
                WindingConfig::GwyeDelta => cur(r.gmd_br_hi).abs(),
                WindingConfig::GwyeGwye => (cur(r.gmd_br_hi) + cur(r.gmd_br_lo) / ratio).abs(),
                // series turns over common turns is ratio - 1
                WindingConfig::GwyeGwyeAuto => (cur(r.gmd_br_se) * (ratio - 1.0) + cur(r.gmd_br_co)).abs() / ratio,
                _ => 0.0,
            };
            (r.branch, v)
        })
        .collect()
}

#[test]
fn effective_gic_matches_definition_on_every_configuration() {
    let mut rng = StdRng::seed_from_u64(5);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..60 {
        let case = random_dc_case(&mut rng, 30);
        let sol = solve_gic::<f64>(&case, &FieldInput::uniform(2.0, 45.0), None).unwrap();
        let want = oracle_effective(&case, &sol.branch_currents);
        let scale = max_abs(&want).max(1e-3);
        for (id, &v) in &want {
            assert!(rel(sol.effective[id], v, scale) < 1e-10);
            let config = case.branch_gmd.iter().find(|r| r.branch == *id).unwrap().config;
            if v > 1e-6 || config == WindingConfig::DeltaDelta {
                seen.insert(format!("{config:?}"));
            }
        }
    }
    assert_eq!(seen.len(), 4, "{seen:?}");
}

/// b4gic with the western transformer rewired to `config`; returns its
/// effective GIC and the loop resistance a hand analysis predicts.
fn rewired_b4gic(config: WindingConfig) -> (f64, f64, f64) {
    let mut case = fixtures::b4gic();
    let row = case.branch_gmd.iter_mut().find(|r| r.branch == 1).unwrap();
    row.config = config;
    let loop_r = match config {
        WindingConfig::GwyeDelta | WindingConfig::GwyeGwye => 0.2 + 0.1 + 1.001 + 0.1 + 0.2,
        WindingConfig::GwyeGwyeAuto => 0.2 + 0.1 + 0.1 + 1.001 + 0.1 + 0.2,
        _ => f64::INFINITY,
    };
    match config {
        WindingConfig::GwyeGwye => {
            // low winding to the neutral from an otherwise unconnected node
            row.gmd_br_lo = Some(4);
            case.gmd_branches.push(gmdgrid::case::GmdBranch {
                index: 4,
                f_bus: 5,
                t_bus: 1,
                parent: 1,
                status: true,
                br_r: 0.1,
                br_v: 0.0,
                len_km: 0.0,
                name: "lo".into(),
            });
        }
        WindingConfig::GwyeGwyeAuto => {
            // series from the line terminal to the low node, common to neutral
            row.gmd_br_hi = None;
            row.gmd_br_se = Some(1);
            row.gmd_br_co = Some(4);
            case.gmd_branches[0].t_bus = 5;
            case.gmd_branches.push(gmdgrid::case::GmdBranch {
                index: 4,
                f_bus: 5,
                t_bus: 1,
                parent: 1,
                status: true,
                br_r: 0.1,
                br_v: 0.0,
                len_km: 0.0,
                name: "co".into(),
            });
        }
        WindingConfig::DeltaDelta => {
            row.gmd_br_hi = None;
            case.gmd_branches.retain(|b| b.index != 1);
        }
        _ => {}
    }
    let case = CaseData::from_tables(case).unwrap();
    let sol = solve_gic::<f64>(&case, &FieldInput::uniform(1.0, 90.0), None).unwrap();
    let (_, le) = displacement(&case, 3, 4);
    (sol.effective[&1], sol.branch_currents[&2].abs(), le / loop_r)
}

#[test]
fn winding_configurations_on_the_two_substation_loop() {
    for config in [WindingConfig::GwyeDelta, WindingConfig::GwyeGwye, WindingConfig::GwyeGwyeAuto] {
        let (eff, line, loop_i) = rewired_b4gic(config);
        assert!(rel(line, loop_i, loop_i) < 1e-9, "{config:?}: {line} vs {loop_i}");
        // only one winding carries the loop current; the other path is open or in series
        assert!(rel(eff, loop_i, loop_i) < 1e-9, "{config:?}: {eff}");
    }
    let (eff, line, _) = rewired_b4gic(WindingConfig::DeltaDelta);
    assert_eq!(eff, 0.0);
    assert!(line < 1e-9);
}

fn currents(case: &CaseData, field: FieldAt) -> BTreeMap<usize, f64> {
    solve_gic::<f64>(case, &FieldInput::Field(field), None).unwrap().branch_currents
}

fn close(a: &BTreeMap<usize, f64>, b: &BTreeMap<usize, f64>, tol: f64) -> Result<(), TestCaseError> {
    let scale = max_abs(a).max(max_abs(b)).max(1e-3);
    for (k, v) in a {
        prop_assert!(rel(*v, b[k], scale) < tol, "branch {k}: {v} vs {}", b[k]);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn scaling_the_field_scales_currents(seed in any::<u64>(), mag in 0.1f64..5.0, dir in 0.0f64..360.0, c in 0.1f64..10.0) {
        let case = random_dc_case(&mut StdRng::seed_from_u64(seed), 30);
        let base = currents(&case, FieldAt::uniform(mag, dir));
        let scaled = currents(&case, FieldAt::uniform(c * mag, dir));
        let want: BTreeMap<usize, f64> = base.iter().map(|(&k, &v)| (k, c * v)).collect();
        close(&scaled, &want, 1e-8)?;
    }

    #[test]
    fn reversing_the_field_negates_currents(seed in any::<u64>(), mag in 0.1f64..5.0, dir in 0.0f64..360.0) {
        let case = random_dc_case(&mut StdRng::seed_from_u64(seed), 30);
        let fwd = currents(&case, FieldAt::uniform(mag, dir));
        let back = currents(&case, FieldAt::uniform(mag, dir + 180.0));
        let want: BTreeMap<usize, f64> = fwd.iter().map(|(&k, &v)| (k, -v)).collect();
        close(&back, &want, 1e-8)?;
    }

    #[test]
    fn north_and_east_components_superpose(seed in any::<u64>(), n in -5.0f64..5.0, e in -5.0f64..5.0) {
        let case = random_dc_case(&mut StdRng::seed_from_u64(seed), 30);
        let both = currents(&case, FieldAt::from_components(n, e));
        let north = currents(&case, FieldAt::from_components(n, 0.0));
        let east = currents(&case, FieldAt::from_components(0.0, e));
        let want: BTreeMap<usize, f64> = north.iter().map(|(&k, &v)| (k, v + east[&k])).collect();
        close(&both, &want, 1e-8)?;
    }

    #[test]
    fn case_files_round_trip(seed in any::<u64>()) {
        let case = random_dc_case(&mut StdRng::seed_from_u64(seed), 30);
        let text = serialize_case(&case);
        prop_assert_eq!(parse_case(&text).unwrap(), case);
    }
}
