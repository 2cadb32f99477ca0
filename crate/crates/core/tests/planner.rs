mod common;

use std::sync::Arc;

use common::{gaussian_2d, random_cloud, rng};
use infoplan_core::domains::{DiscreteGridPomdp, LightDark2D, LightDarkConfig, LinearGaussian};
use infoplan_core::filter::ParticleBelief;
use infoplan_core::oracle::{abstract_tree_value, exact_tree_value, SampledBelief};
use infoplan_core::planner::{
    plan, rollout_from_belief, widening_limit, ActionSelection, BeliefNode, Fsss, PftDpw, PlannerConfig, PlannerKind,
};
use infoplan_core::pomdp::{ActionId, RewardSpec, StateVec};
use proptest::prelude::*;

fn gaussian_root(seed: u64, n: usize) -> Arc<ParticleBelief<f64>> {
    Arc::new(random_cloud(n, 2, &mut rng(seed)))
}

/// One state, `actions` identical actions, constant reward.
fn constant_model(actions: usize, reward: f64) -> DiscreteGridPomdp<f64> {
    DiscreteGridPomdp {
        n_states: 1,
        n_obs: 2,
        n_actions: actions,
        transition: vec![vec![vec![1.0]]; actions],
        observation: vec![vec![0.5, 0.5]],
        reward: vec![vec![reward; actions]],
        b0: vec![1.0],
        discount: 1.0,
    }
}

/// Several states that never move, uninformative observations, identical actions.
fn symmetric_model(actions: usize) -> DiscreteGridPomdp<f64> {
    let n = 3;
    let identity: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|t| if s == t { 1.0 } else { 0.0 }).collect()).collect();
    DiscreteGridPomdp {
        n_states: n,
        n_obs: 2,
        n_actions: actions,
        transition: vec![identity; actions],
        observation: vec![vec![0.5, 0.5]; n],
        reward: vec![vec![0.0; actions]; n],
        b0: vec![1.0 / n as f64; n],
        discount: 1.0,
    }
}

fn uniform_root(m: &DiscreteGridPomdp<f64>) -> Arc<ParticleBelief<f64>> {
    Arc::new(ParticleBelief::uniform((0..m.n_states).map(|s| m.state(s)).collect()).unwrap())
}

fn exhaustive_config(depth: usize, clusters: usize, cluster_size: usize, actions: usize) -> PlannerConfig<f64> {
    let branching = actions * clusters * cluster_size;
    PlannerConfig {
        iterations: branching.pow(depth as u32),
        depth,
        clusters,
        cluster_size,
        rollouts: false,
        selection: ActionSelection::LeastVisited,
        ..Default::default()
    }
}

fn visit_all<T: infoplan_core::Scalar>(node: &BeliefNode<T>, f: &mut impl FnMut(&BeliefNode<T>)) {
    node.walk(f);
}

#[test]
fn one_iteration_brackets_the_rollout() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 1,
        clusters: 2,
        cluster_size: 2,
        gamma: Some(0.9),
        ..Default::default()
    };
    let tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(1, 10), &mut rng(2)).unwrap();
    let root = tree.root();
    assert_eq!(root.actions().len(), 1);
    let a = &root.actions()[0];
    let v = a.rollout_value().expect("first visit rolls out");
    let b = a.reward_bounds();
    assert!((a.lower() - (b.lb + 0.9 * v)).abs() < 1e-12);
    assert!((a.upper() - (b.ub + 0.9 * v)).abs() < 1e-12);
    assert_eq!((root.lower(), root.upper()), (a.lower(), a.upper()));
    assert_eq!(root.visits(), 1);
}

#[test]
fn exhaustive_iterations_build_the_full_sparse_sampling_tree() {
    let model = gaussian_2d();
    for (depth, c, k) in [(1, 2, 1), (2, 2, 1), (2, 1, 2), (3, 1, 2)] {
        let cfg = exhaustive_config(depth, c, k, 3);
        let tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(3, 6), &mut rng(4)).unwrap();
        let b = 3 * c * k;
        let want: usize = (0..=depth).map(|l| b.pow(l as u32)).sum();
        assert_eq!(tree.root().count_belief_nodes(), want, "depth {depth} C {c} K {k}");
        let sampled = SampledBelief::from_planner(tree.root()).unwrap();
        assert_eq!(sampled.count_belief_nodes(), want);
    }
}

#[test]
fn solve_is_deterministic_for_a_fixed_seed() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 200,
        clusters: 2,
        cluster_size: 2,
        ..Default::default()
    };
    let engine = Fsss::new(cfg, &model).unwrap();
    let a = engine.solve(gaussian_root(5, 12), &mut rng(6)).unwrap();
    let b = engine.solve(gaussian_root(5, 12), &mut rng(6)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_action_model_returns_that_action() {
    let model = constant_model(1, -2.0);
    let cfg = PlannerConfig {
        iterations: 30,
        clusters: 1,
        cluster_size: 2,
        ..Default::default()
    };
    let out = Fsss::new(cfg, &model).unwrap().solve(uniform_root(&model), &mut rng(7)).unwrap();
    assert_eq!(out.action, ActionId(0));
}

#[test]
fn refinement_is_a_fixed_point_once_complete() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 150,
        clusters: 2,
        cluster_size: 3,
        ..Default::default()
    };
    let mut tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(8, 10), &mut rng(9)).unwrap();
    tree.refine_all().unwrap();
    let mut abstract_nodes = 0;
    visit_all(tree.root(), &mut |b| {
        for a in b.actions() {
            assert_eq!(a.reward_bounds().width(), 0.0);
            if a.is_abstract() {
                abstract_nodes += 1;
            }
        }
    });
    assert_eq!(abstract_nodes, 0);
    let before = (tree.root().lower(), tree.root().upper());
    tree.refine_all().unwrap();
    for a in 0..3 {
        tree.refine(ActionId(a)).unwrap();
    }
    assert_eq!(before, (tree.root().lower(), tree.root().upper()));
}

#[test]
fn refinement_never_widens_the_root_gap() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 120,
        clusters: 2,
        cluster_size: 4,
        ..Default::default()
    };
    let mut tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(10, 8), &mut rng(11)).unwrap();
    for step in 0..200 {
        let a = ActionId(step % 3);
        let before = tree.root().actions()[a.0].gap();
        tree.refine(a).unwrap();
        let after = tree.root().actions()[a.0].gap();
        assert!(after <= before + 1e-9);
    }
}

#[test]
fn adapted_action_dominates_the_others() {
    let model = gaussian_2d();
    for seed in 0..5 {
        let cfg = PlannerConfig {
            iterations: 150,
            clusters: 2,
            cluster_size: 4,
            ..Default::default()
        };
        let mut tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(seed, 10), &mut rng(seed)).unwrap();
        let best = tree.adapt_bounds().unwrap();
        let root = tree.root();
        let lb = root.actions()[best.0].lower();
        for (i, a) in root.actions().iter().enumerate() {
            if i < best.0 {
                assert!(a.upper() < lb);
            } else if i > best.0 {
                assert!(a.upper() <= lb);
            }
        }
    }
}

#[test]
fn unit_clusters_need_no_refinement() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 100,
        clusters: 4,
        cluster_size: 1,
        ..Default::default()
    };
    let out = Fsss::new(cfg, &model).unwrap().solve(gaussian_root(12, 10), &mut rng(13)).unwrap();
    assert_eq!(out.refine_calls, 0);
    assert_eq!(out.root_gap, 0.0);
}

#[test]
fn symmetric_model_refines_fully_and_breaks_ties_low() {
    let model = symmetric_model(3);
    let cfg = PlannerConfig {
        iterations: 60,
        depth: 2,
        clusters: 1,
        cluster_size: 2,
        ..Default::default()
    };
    let mut tree = Fsss::new(cfg, &model).unwrap().build(uniform_root(&model), &mut rng(14)).unwrap();
    let action = tree.adapt_bounds().unwrap();
    assert_eq!(action, ActionId(0));
    assert!(tree.refine_calls() > 0);
    assert!(tree.root().gap().abs() < 1e-12);
}

#[test]
fn abstraction_and_adaptation_reproduce_the_unit_cluster_choice() {
    let model: LightDark2D<f64> = LightDark2D::new(LightDarkConfig::default()).unwrap();
    for seed in 0..4 {
        let root = Arc::new(model.sample_prior(12, &mut rng(seed)).unwrap());
        let cfg = PlannerConfig {
            iterations: 150,
            clusters: 2,
            cluster_size: 4,
            spec: model.reward_spec(),
            selection: ActionSelection::LeastVisited,
            ..Default::default()
        };
        let a = plan(PlannerKind::AiFsss, &cfg, &model, Arc::clone(&root), &mut rng(100 + seed)).unwrap();
        let b = plan(PlannerKind::Fsss, &cfg, &model, root, &mut rng(100 + seed)).unwrap();
        assert_eq!(a.action, b.action, "seed {seed}");
    }
}

#[test]
fn fully_refined_exhaustive_tree_matches_the_oracle() {
    let model = gaussian_2d();
    let spec = RewardSpec::entropy_penalty();
    for seed in 0..3 {
        let cfg = exhaustive_config(2, 1, 2, 3);
        let mut tree = Fsss::new(cfg, &model).unwrap().build(gaussian_root(seed, 8), &mut rng(seed)).unwrap();
        let sampled = SampledBelief::from_planner(tree.root()).unwrap();
        let exact = exact_tree_value(&sampled, &model, &spec, 1.0);
        let abs = abstract_tree_value(&sampled, &model, &spec, 1.0, 2).unwrap();
        // Before refinement every bound is built on the abstract rewards.
        assert!((tree.root().lower() - abs.value).abs() < 1e-9);
        assert!(exact.value - abs.value >= -1e-9 && exact.value - abs.value <= 2.0 * 2f64.ln() + 1e-9);
        tree.refine_all().unwrap();
        assert!((tree.root().lower() - exact.value).abs() < 1e-9);
        assert!((tree.root().upper() - exact.value).abs() < 1e-9);
    }
}

#[test]
fn rollout_edge_cases() {
    let model = constant_model(1, 0.0);
    let cfg = PlannerConfig::default();
    let root = uniform_root(&model);
    assert_eq!(rollout_from_belief(Arc::clone(&root), 0, &model, &cfg, 1.0, &mut rng(15)).unwrap(), 0.0);
    assert_eq!(rollout_from_belief(Arc::clone(&root), 5, &model, &cfg, 1.0, &mut rng(15)).unwrap(), 0.0);
    let g = gaussian_2d();
    let r = gaussian_root(16, 8);
    let a = rollout_from_belief(Arc::clone(&r), 3, &g, &cfg, 0.9, &mut rng(17)).unwrap();
    let b = rollout_from_belief(r, 3, &g, &cfg, 0.9, &mut rng(17)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn widening_admits_four_children_on_the_first_visit() {
    let cfg = PlannerConfig::<f64>::default();
    assert_eq!(widening_limit(&cfg, 1), 4);
    assert_eq!(widening_limit(&cfg, 1000), 4);
    let wide = PlannerConfig {
        pft: infoplan_core::planner::PftParams {
            c_ucb: 1.0,
            k_o: 1.0,
            alpha_o: 0.5,
        },
        ..PlannerConfig::default()
    };
    assert_eq!(widening_limit(&wide, 16), 4);
}

#[test]
fn pft_values_a_constant_reward_chain() {
    let model = constant_model(1, 1.0);
    let cfg = PlannerConfig {
        iterations: 50,
        depth: 3,
        gamma: Some(1.0),
        spec: RewardSpec::new(1.0, 0.0).unwrap(),
        ..Default::default()
    };
    let out = PftDpw::new(cfg, &model).unwrap().plan(uniform_root(&model), &mut rng(18)).unwrap();
    assert_eq!(out.action, ActionId(0));
    assert!((out.values[0] - 3.0).abs() < 1e-12);
}

#[test]
fn pft_is_deterministic_for_a_fixed_seed() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 100,
        ..Default::default()
    };
    let pft = PftDpw::new(cfg, &model).unwrap();
    let a = pft.plan(gaussian_root(19, 10), &mut rng(20)).unwrap();
    let b = pft.plan(gaussian_root(19, 10), &mut rng(20)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn budget_stops_early_but_runs_at_least_once() {
    let model = gaussian_2d();
    let cfg = PlannerConfig {
        iterations: 1_000_000,
        budget: Some(std::time::Duration::ZERO),
        ..Default::default()
    };
    let out = Fsss::new(cfg.clone(), &model).unwrap().solve(gaussian_root(21, 6), &mut rng(22)).unwrap();
    assert_eq!(out.iterations, 1);
    let out = PftDpw::new(cfg, &model).unwrap().plan(gaussian_root(21, 6), &mut rng(22)).unwrap();
    assert_eq!(out.iterations, 1);
}

#[test]
fn single_precision_planning_runs() {
    let model: LightDark2D<f32> = LightDark2D::new(LightDarkConfig::default()).unwrap();
    let root = Arc::new(model.sample_prior(10, &mut rng(23)).unwrap());
    let cfg = PlannerConfig {
        iterations: 60,
        clusters: 2,
        cluster_size: 2,
        spec: model.reward_spec(),
        ..Default::default()
    };
    for kind in [PlannerKind::AiFsss, PlannerKind::Fsss, PlannerKind::PftDpw] {
        let out = plan(kind, &cfg, &model, Arc::clone(&root), &mut rng(24)).unwrap();
        assert!(out.action.0 < 9);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let model = gaussian_2d();
    for cfg in [
        PlannerConfig { iterations: 0, ..Default::default() },
        PlannerConfig { depth: 0, ..Default::default() },
        PlannerConfig { cluster_size: 0, ..Default::default() },
        PlannerConfig { gamma: Some(1.5), ..Default::default() },
    ] {
        assert!(Fsss::new(cfg, &model).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bounds_stay_ordered_everywhere(seed in any::<u64>(), iters in 1usize..80, k in 1usize..4, w2 in prop_oneof![Just(-1.0f64), Just(1.0)]) {
        let model = LinearGaussian::new(
            vec![StateVec::new([0.5]), StateVec::new([-0.5])],
            vec![0.3],
            vec![0.6],
            StateVec::new([1.0]),
        ).unwrap();
        let cfg = PlannerConfig {
            iterations: iters,
            clusters: 2,
            cluster_size: k,
            spec: RewardSpec::new(1.0, w2).unwrap(),
            ..Default::default()
        };
        let root = Arc::new(random_cloud(6, 1, &mut rng(seed)));
        let mut tree = Fsss::new(cfg, &model).unwrap().build(root, &mut rng(seed ^ 1)).unwrap();
        let mut ok = true;
        visit_all(tree.root(), &mut |b| {
            ok &= b.lower() <= b.upper() + 1e-9;
            ok &= b.actions().iter().all(|a| a.lower() <= a.upper() + 1e-9);
        });
        prop_assert!(ok);
        tree.adapt_bounds().unwrap();
        visit_all(tree.root(), &mut |b| ok &= b.lower() <= b.upper() + 1e-9);
        prop_assert!(ok);
    }
}
