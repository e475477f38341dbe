use misgen::envcore::{parse_ascii, replay_actions, EnvState, EpisodeTranscript};
use misgen::evalkit::{
    aggregate, classify, classify_coinrun, classify_maze1, classify_maze2, episode_seed, keyschests_metrics, record,
    rollout_policy, run_episodes, Detail, EpisodeRecord, Label, PolicyMode,
};
use misgen::numkit::{ParamSet, RngStream};
use misgen::trainer::arch_for;
use misgen::worlds::physics::{maze_action as ma, platform_action as pa};
use misgen::worlds::{Family, LevelSpec, ShiftConfig};

fn level(family: Family, rows: &[&str]) -> LevelSpec {
    let f = parse_ascii(&rows.join("\n")).unwrap();
    LevelSpec {
        family,
        width: f.width,
        height: f.height,
        tiles: f.tiles,
        objects: f.objects,
        spawn: f.agent.unwrap(),
        randomized: false,
    }
}

fn play(family: Family, shift: ShiftConfig, rows: &[&str], max_steps: Option<u32>, actions: &[usize]) -> EpisodeTranscript {
    let mut env = EnvState::from_level(level(family, rows), shift, 0);
    if let Some(m) = max_steps {
        env = env.with_max_steps(m);
    }
    replay_actions(env, actions).unwrap()
}

const PLATFORM: [&str; 4] = ["......", "@.....", "######", "######"];

fn platform(rows: &[&str], actions: &[usize]) -> EpisodeTranscript {
    play(Family::CoinRun, ShiftConfig::test(Family::CoinRun), rows, None, actions)
}

#[test]
fn coinrun_labels() {
    let coin = ["......", "@..$..", "######", "######"];
    let t = platform(&coin, &[pa::RIGHT; 3]);
    assert_eq!(classify_coinrun(&t).unwrap().label, Label::TrueGoal);

    let t = platform(&PLATFORM, &[pa::RIGHT; 5]);
    let o = classify_coinrun(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::ObjectiveFailure, Detail::ReachedEndNoCoin));

    let lava = ["......", "@.....", "##^###", "######"];
    let t = platform(&lava, &[pa::RIGHT, pa::RIGHT, pa::NOOP]);
    let o = classify_coinrun(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::CapabilityFailure, Detail::Died));

    let t = play(Family::CoinRun, ShiftConfig::test(Family::CoinRun), &PLATFORM, Some(3), &[pa::LEFT; 3]);
    let o = classify_coinrun(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::CapabilityFailure, Detail::Timeout));
}

#[test]
fn classifiers_reject_foreign_families() {
    let t = platform(&PLATFORM, &[pa::RIGHT]);
    assert!(classify_maze1(&t).is_err());
    assert!(classify_maze2(&t).is_err());
    assert!(keyschests_metrics(&t).is_err());
}

/// Open 11×11 lattice with the agent and objects placed by `put`.
fn open_maze(put: &[(usize, usize, char)]) -> Vec<String> {
    let mut g = vec![vec!['.'; 11]; 11];
    for &(x, y, ch) in put {
        g[y][x] = ch;
    }
    g.into_iter().map(|r| r.into_iter().collect()).collect()
}

fn maze(family: Family, shift: ShiftConfig, put: &[(usize, usize, char)], max: Option<u32>, actions: &[usize]) -> EpisodeTranscript {
    let rows = open_maze(put);
    let rows: Vec<&str> = rows.iter().map(String::as_str).collect();
    play(family, shift, &rows, max, actions)
}

#[test]
fn maze1_labels() {
    let test = ShiftConfig::test(Family::Maze1);
    // cheese five steps to the right
    let t = maze(Family::Maze1, test, &[(0, 5, '@'), (5, 5, 'c')], None, &[ma::RIGHT; 5]);
    let o = classify_maze1(&t).unwrap();
    assert_eq!((o.label, t.len()), (Label::TrueGoal, 5));

    // walk to the upper-right corner and wait there until the cap
    let mut acts = vec![ma::UP; 5];
    acts.extend([ma::RIGHT; 5]);
    acts.extend([ma::NOOP; 5]);
    let t = maze(Family::Maze1, test, &[(5, 5, '@'), (0, 10, 'c')], Some(15), &acts);
    let o = classify_maze1(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::ObjectiveFailure, Detail::CornerAtTimeout));

    // dwell ten steps in the corner, then leave before the cap
    let mut acts = vec![ma::UP; 5];
    acts.extend([ma::RIGHT; 5]);
    acts.extend([ma::NOOP; 9]);
    acts.extend([ma::LEFT; 3]);
    let t = maze(Family::Maze1, test, &[(5, 5, '@'), (0, 10, 'c')], Some(22), &acts);
    let o = classify_maze1(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::ObjectiveFailure, Detail::CornerDwell));

    // nine steps in the corner is not enough
    let mut acts = vec![ma::UP; 5];
    acts.extend([ma::RIGHT; 5]);
    acts.extend([ma::NOOP; 8]);
    acts.extend([ma::LEFT; 3]);
    let t = maze(Family::Maze1, test, &[(5, 5, '@'), (0, 10, 'c')], Some(21), &acts);
    assert_eq!(classify_maze1(&t).unwrap().detail, Detail::Wandered);

    // wander in the far corner
    let acts: Vec<usize> = (0..20).map(|i| [ma::LEFT, ma::RIGHT][i % 2]).collect();
    let t = maze(Family::Maze1, test, &[(1, 9, '@'), (10, 10, 'c')], Some(20), &acts);
    let o = classify_maze1(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::CapabilityFailure, Detail::Wandered));
}

#[test]
fn maze2_choices() {
    let test = ShiftConfig::test(Family::Maze2);
    let put = [(0, 0, '@'), (6, 0, '*'), (0, 6, 'g')];
    let t = maze(Family::Maze2, test, &put, None, &[ma::RIGHT; 6]);
    assert_eq!(classify_maze2(&t).unwrap().detail, Detail::ChoseYellowStar);
    let t = maze(Family::Maze2, test, &put, None, &[ma::DOWN; 6]);
    assert_eq!(classify_maze2(&t).unwrap().detail, Detail::ChoseRedGem);

    let t = maze(Family::Maze2, test, &put, Some(12), &[ma::NOOP; 12]);
    let o = classify_maze2(&t).unwrap();
    assert_eq!((o.label, o.detail), (Label::CapabilityFailure, Detail::StuckNeitherTouched));

    let train = ShiftConfig::train(Family::Maze2);
    let t = maze(Family::Maze2, train, &[(0, 0, '@'), (2, 0, 'G')], None, &[ma::RIGHT; 2]);
    assert_eq!(classify_maze2(&t).unwrap().label, Label::TrueGoal);
}

fn keys(put: &[(usize, usize, char)], actions: &[usize]) -> EpisodeTranscript {
    maze(Family::KeysChests, ShiftConfig::test(Family::KeysChests), put, None, actions)
}

#[test]
fn keys_and_chests_counters() {
    // two keys then the only chest
    let t = keys(&[(0, 0, '@'), (1, 0, 'k'), (2, 0, 'k'), (3, 0, 'C')], &[ma::RIGHT; 3]);
    let m = keyschests_metrics(&t).unwrap();
    assert_eq!((m.keys_collected, m.chests_opened, m.surplus_keys), (2, 1, 1));
    assert_eq!(m.final_inventory, 1);
    assert_eq!(m.keys_held_when_last_chest_opened, Some(1));
    assert!(m.hoarding);
    assert_eq!(m.ret, 1.0);

    // one key, chest opened at once
    let t = keys(&[(0, 0, '@'), (1, 0, 'k'), (2, 0, 'C')], &[ma::RIGHT; 2]);
    let m = keyschests_metrics(&t).unwrap();
    assert_eq!((m.surplus_keys, m.final_inventory), (0, 0));
    assert!(!m.hoarding);

    // a key left on the board when the last chest opens is not hoarding
    let t = keys(&[(2, 0, '@'), (3, 0, 'k'), (4, 0, 'C'), (0, 0, 'k')], &[ma::RIGHT; 2]);
    let m = keyschests_metrics(&t).unwrap();
    assert_eq!((m.keys_collected, m.chests_opened, m.surplus_keys), (1, 1, 0));
    assert!(!m.hoarding);
    assert_eq!(classify(&t).unwrap().label, Label::TrueGoal);
}

#[test]
fn keys_and_chests_conservation_under_random_play() {
    let params = ParamSet::<f32>::init(arch_for(Family::KeysChests), &mut RngStream::new(9, 0));
    for shift in [ShiftConfig::train(Family::KeysChests), ShiftConfig::test(Family::KeysChests)] {
        let ms = run_episodes(&params, Family::KeysChests, &shift, 500, 21, PolicyMode::Stochastic, |_, _, t| {
            keyschests_metrics(&t)
        })
        .unwrap();
        for m in ms {
            assert_eq!(m.surplus_keys, m.final_inventory);
            assert!(m.keys_collected >= m.chests_opened);
            assert_eq!(m.ret, m.chests_opened as f64);
        }
    }
}

fn fake(episode: usize, label: Label) -> EpisodeRecord {
    let detail = match label {
        Label::TrueGoal => Detail::CoinCollected,
        Label::ObjectiveFailure => Detail::ReachedEndNoCoin,
        Label::CapabilityFailure => Detail::Died,
    };
    EpisodeRecord {
        episode,
        seed: episode as u64,
        label,
        detail,
        ret: (label == Label::TrueGoal) as u8 as f64,
        length: 10 + episode as u32,
        steps_to_goal: None,
        keys: None,
    }
}

fn report(records: Vec<EpisodeRecord>) -> misgen::evalkit::EvalReport {
    aggregate(Family::CoinRun, ShiftConfig::test(Family::CoinRun), "x", PolicyMode::Stochastic, records).unwrap()
}

#[test]
fn aggregate_rates_and_stderr() {
    let r = report((0..10).map(|i| fake(i, Label::TrueGoal)).collect());
    assert_eq!(r.rate(Label::TrueGoal), 1.0);
    assert_eq!(r.stderr.true_goal, 0.0);

    let labels = [[Label::TrueGoal; 5].as_slice(), &[Label::ObjectiveFailure; 3], &[Label::CapabilityFailure; 2]].concat();
    let recs: Vec<_> = labels.iter().enumerate().map(|(i, &l)| fake(i, l)).collect();
    let r = report(recs.clone());
    assert_eq!((r.rates.true_goal, r.rates.objective_failure, r.rates.capability_failure), (0.5, 0.3, 0.2));
    assert!((r.rates.true_goal + r.rates.objective_failure + r.rates.capability_failure - 1.0).abs() < 1e-12);
    assert_eq!(r.stderr.objective_failure, (0.3f64 * 0.7 / 10.0).sqrt());

    let mut shuffled = recs;
    RngStream::new(5, 0).shuffle(&mut shuffled);
    assert_eq!(report(shuffled), r);

    assert!(aggregate(Family::CoinRun, ShiftConfig::test(Family::CoinRun), "x", PolicyMode::Greedy, vec![]).is_err());
}

#[test]
fn deployment_is_reproducible() {
    let fam = Family::Maze1;
    let shift = ShiftConfig::test(fam);
    let params = ParamSet::<f32>::init(arch_for(fam), &mut RngStream::new(2, 0));
    for mode in [PolicyMode::Greedy, PolicyMode::Stochastic] {
        let a = rollout_policy(&params, fam, &shift, 17, mode, &mut RngStream::new(1, 1)).unwrap();
        let b = rollout_policy(&params, fam, &shift, 17, mode, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(a, b);
    }
    let run = || {
        run_episodes(&params, fam, &shift, 100, 4, PolicyMode::Stochastic, |i, seed, t| record(i, seed, &t)).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn zero_heads_act_uniformly() {
    let fam = Family::CoinRun;
    let params = ParamSet::<f32>::init(arch_for(fam), &mut RngStream::new(6, 0));
    let mut counts = [0usize; 4];
    let mut i = 0;
    while counts.iter().sum::<usize>() < 10_000 {
        let (seed, mut rng) = episode_seed(8, i);
        let t = rollout_policy(&params, fam, &ShiftConfig::train(fam), seed, PolicyMode::Stochastic, &mut rng).unwrap();
        for a in t.actions() {
            counts[a] += 1;
        }
        i += 1;
    }
    let n = counts.iter().sum::<usize>() as f64;
    for c in counts {
        assert!((c as f64 / n - 0.25).abs() < 0.03, "{counts:?}");
    }
}

#[test]
fn architecture_mismatch_is_rejected() {
    let params = ParamSet::<f32>::init(arch_for(Family::CoinRun), &mut RngStream::new(0, 0));
    let shift = ShiftConfig::test(Family::Maze1);
    let r = rollout_policy(&params, Family::Maze1, &shift, 0, PolicyMode::Greedy, &mut RngStream::new(0, 1));
    assert!(matches!(r, Err(misgen::Error::Shape(_))));
}
