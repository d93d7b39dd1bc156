use beliefnet::estimators::Model;
use beliefnet::harness::{
    run_experiment, Aggregate, CpRecord, DataSource, ExperimentConfig, Family, Results, StrategyRecord, SyntheticSource,
};

fn config(family: Family, m_values: Vec<usize>, realizations: usize) -> ExperimentConfig {
    ExperimentConfig {
        family,
        source: DataSource::Synthetic(SyntheticSource {
            model: Model::Gmg,
            n: 40,
            m_values,
            alpha_values: vec![-1.0, 1.0],
        }),
        realizations,
        trials: 6,
        control_fraction: 0.1,
        master_seed: 99,
        alpha: Some(0.5),
        alpha_learning: None,
    }
}

fn cp_records(cfg: &ExperimentConfig) -> Vec<CpRecord> {
    match run_experiment(cfg).unwrap().results {
        Results::Cp { networks, .. } => networks,
        other => panic!("unexpected results {other:?}"),
    }
}

fn strategy_records(cfg: &ExperimentConfig) -> Vec<StrategyRecord> {
    match run_experiment(cfg).unwrap().results {
        Results::Strategy { networks, .. } => networks,
        other => panic!("unexpected results {other:?}"),
    }
}

#[test]
fn more_realizations_extend_without_changing_earlier_networks() {
    let short = cp_records(&config(Family::Cp, vec![2], 3));
    let long = cp_records(&config(Family::Cp, vec![2], 5));
    for record in &short {
        let twin = long
            .iter()
            .find(|r| r.cell == record.cell && r.index == record.index)
            .expect("record survives");
        assert_eq!(record, twin);
    }
    assert_eq!(long.len(), short.len() / 3 * 5);
}

#[test]
fn cell_order_does_not_change_cell_results() {
    let forward = strategy_records(&config(Family::Strategy, vec![1, 3], 2));
    let backward = strategy_records(&config(Family::Strategy, vec![3, 1], 2));
    assert_eq!(forward.len(), backward.len());
    for record in &forward {
        let twin = backward
            .iter()
            .find(|r| r.cell == record.cell && r.index == record.index)
            .expect("record present in both orders");
        assert_eq!(record, twin);
    }
}

#[test]
fn master_seed_changes_networks() {
    let a = cp_records(&config(Family::Cp, vec![2], 2));
    let mut cfg = config(Family::Cp, vec![2], 2);
    cfg.master_seed += 1;
    let b = cp_records(&cfg);
    assert_ne!(a, b);
}

#[test]
fn cp_aggregates_follow_from_records() {
    let report = run_experiment(&config(Family::Cp, vec![2, 3], 4)).unwrap();
    let Results::Cp {
        networks,
        ba_error,
        gmg_error,
        gmg_excluded,
        gmg_win_rate,
        ..
    } = report.results
    else {
        panic!("cp results expected");
    };
    let ba: Vec<f64> = networks.iter().map(|r| r.ba_error).collect();
    let gmg: Vec<f64> = networks.iter().filter_map(|r| r.gmg_error).collect();
    assert_eq!(ba_error, Aggregate::of(&ba));
    assert_eq!(gmg_error, Aggregate::of(&gmg));
    assert_eq!(gmg_excluded, networks.len() - gmg.len());
    let wins = networks.iter().filter(|r| r.gmg_better).count();
    assert_eq!(gmg_win_rate, wins as f64 / networks.len() as f64);
    for r in &networks {
        assert_eq!(r.gmg_better, r.gmg_error.is_some_and(|g| g <= r.ba_error));
    }
}

#[test]
fn strategy_aggregates_follow_from_records() {
    let report = run_experiment(&config(Family::Strategy, vec![2], 4)).unwrap();
    let Results::Strategy {
        networks,
        ba_cp,
        gmg_cp,
        gmg_win_rate,
        identical_sets,
        ..
    } = report.results
    else {
        panic!("strategy results expected");
    };
    let ba: Vec<f64> = networks.iter().map(|r| r.ba_cp).collect();
    let gmg: Vec<f64> = networks.iter().map(|r| r.gmg_cp).collect();
    assert_eq!(ba_cp, Aggregate::of(&ba));
    assert_eq!(gmg_cp, Aggregate::of(&gmg));
    let wins = networks.iter().filter(|r| r.gmg_cp >= r.ba_cp).count();
    assert_eq!(gmg_win_rate, wins as f64 / networks.len() as f64);
    assert_eq!(identical_sets, networks.iter().filter(|r| r.identical_sets).count());
    for r in networks.iter().filter(|r| r.identical_sets) {
        // the same belief draws are used for both sets
        assert_eq!(r.ba_cp, r.gmg_cp);
    }
}
