use gmdgrid::case::{CaseData, WindingConfig};
use gmdgrid::synth::{random_switching_case, SwitchingCaseOptions};
use gmdgrid_ots::plan::dispatch_cost;
use gmdgrid_ots::{build_model, enumerate_solve, solve, verify_plan, MitigationPlan, OtsError, OtsOptions};
use rand::rngs::StdRng;
use rand::SeedableRng;

/// Open branches carry no ac flow, no dc current and no effective GIC.
fn assert_switch_off(case: &CaseData, plan: &MitigationPlan) {
    for (&id, &state) in &plan.z {
        if state == 1 {
            continue;
        }
        if let Some(f) = plan.flows.get(&id) {
            assert!(f.iter().all(|p| p.abs() < 1e-7), "branch {id} flow {f:?}");
        }
        for g in case.gmd_branches.iter().filter(|g| g.parent == id) {
            assert!(plan.gic[&g.index].iter().all(|i| i.abs() < 1e-6), "dc branch {}", g.index);
        }
        if let Some(ie) = plan.i_eff.get(&id) {
            assert!(ie.iter().all(|i| i.abs() < 1e-6));
        }
    }
}

/// The effective-GIC variable bounds the winding expression from above.
fn assert_relaxation_sound(case: &CaseData, plan: &MitigationPlan) {
    for row in case.transformers() {
        assert_eq!(row.config, WindingConfig::GwyeDelta);
        let hi = &plan.gic[&row.gmd_br_hi.unwrap()];
        for (ie, i) in plan.i_eff[&row.branch].iter().zip(hi) {
            assert!(*ie >= i.abs() - 1e-6, "{ie} < |{i}|");
        }
    }
}

#[test]
fn branch_and_bound_matches_enumeration() {
    let mut rng = StdRng::seed_from_u64(2024);
    let (mut solved, mut switched) = (0, 0);
    for trial in 0..24 {
        let (case, scenario) = random_switching_case(&mut rng, SwitchingCaseOptions::default());
        let model = build_model(&case, &scenario, &OtsOptions::default()).unwrap();
        match (solve(&case, &model), enumerate_solve(&case, &model)) {
            (Ok(bb), Ok(en)) => {
                let gap = (bb.model_objective - en.model_objective) / en.model_objective.abs().max(1.0);
                assert!(gap.abs() <= 1e-4, "trial {trial}: {} vs {}", bb.model_objective, en.model_objective);
                let report = verify_plan(&case, &scenario, &bb).unwrap();
                assert!(report.is_clean(), "trial {trial}: {:?}", report.violations);
                assert_switch_off(&case, &bb);
                assert_relaxation_sound(&case, &bb);
                let cost = dispatch_cost(&case, &bb.dispatch);
                assert!((bb.objective - cost).abs() <= 1e-6 * cost.abs().max(1.0));
                assert!((report.recomputed_objective - bb.objective).abs() <= 1e-6 * cost.abs().max(1.0));
                solved += 1;
                switched += usize::from(bb.z != bb.z_nom);
            }
            (Err(OtsError::Infeasible { .. }), Err(OtsError::Infeasible { .. })) => {}
            (bb, en) => panic!("trial {trial}: {:?} / {:?}", bb.err(), en.err()),
        }
    }
    assert!(solved >= 20, "{solved}");
    assert!(switched >= 5, "{switched}");
}
