use misgen::envcore::{batch_step, reset, EnvState, EpisodeTranscript, EventTag, GOAL_REWARD};
use misgen::numkit::RngStream;
use misgen::worlds::{Family, ShiftConfig};

const FAMILIES: [Family; 4] = [Family::CoinRun, Family::Maze1, Family::Maze2, Family::KeysChests];

fn fleet(family: Family, n: usize, base: u64) -> Vec<EnvState> {
    (0..n)
        .map(|i| reset(family, base + i as u64, &ShiftConfig::train(family)).unwrap().0)
        .collect()
}

#[test]
fn batch_step_is_order_independent() {
    for family in FAMILIES {
        let mut envs = fleet(family, 64, 100);
        let mut actions_rng = RngStream::new(1, 0);
        let mut seeds = RngStream::new(1, 1);
        let mut perm: Vec<usize> = (0..envs.len()).collect();
        for _ in 0..40 {
            let actions: Vec<usize> = envs.iter().map(|_| actions_rng.index(family.num_actions())).collect();
            RngStream::new(2, 0).shuffle(&mut perm);
            let mut shuffled: Vec<EnvState> = perm.iter().map(|&i| envs[i].clone()).collect();
            let shuffled_actions: Vec<usize> = perm.iter().map(|&i| actions[i]).collect();
            let mut other_seeds = RngStream::new(9, 9);
            let permuted = batch_step(&mut shuffled, &shuffled_actions, &mut other_seeds).unwrap();
            let direct = batch_step(&mut envs, &actions, &mut seeds).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                assert_eq!(permuted[j], direct[i]);
            }
        }
    }
}

#[test]
fn batch_of_256_is_reproducible() {
    for family in FAMILIES {
        let run = || {
            let mut envs = fleet(family, 256, 0);
            let mut seeds = RngStream::new(5, 1);
            let mut acts = RngStream::new(5, 2);
            let mut total = 0f64;
            let mut tags = Vec::new();
            for _ in 0..100 {
                let actions: Vec<usize> = envs.iter().map(|_| acts.index(family.num_actions())).collect();
                for r in batch_step(&mut envs, &actions, &mut seeds).unwrap() {
                    total += r.reward as f64;
                    tags.push(r.tags);
                }
            }
            (total, tags, envs.iter().map(|e| e.observe()).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }
}

fn random_episode(family: Family, shift: ShiftConfig, seed: u64, rng: &mut RngStream) -> EpisodeTranscript {
    let (mut env, obs) = reset(family, seed, &shift).unwrap();
    assert!(obs.is_well_formed());
    let mut t = EpisodeTranscript::start(&env);
    while !env.is_done() {
        let a = rng.index(family.num_actions());
        let r = env.step(a).unwrap();
        assert!(r.observation.is_well_formed());
        assert_eq!(r.done, env.is_done());
        if r.reward != 0.0 {
            assert!(r.tags.rewarding_count() > 0);
        }
        if r.done {
            assert!(r.tags.terminal().is_some(), "{family} {:?}", r.tags);
        }
        t.push(a, &r);
    }
    assert!(env.step(0).is_err());
    assert!(env.is_done());
    t
}

#[test]
fn random_play_invariants_and_replay() {
    let mut rng = RngStream::new(11, 0);
    for family in FAMILIES {
        for shift in [ShiftConfig::train(family), ShiftConfig::test(family)] {
            for seed in 0..60 {
                let t = random_episode(family, shift, seed, &mut rng);
                assert!(t.len() as u32 <= family.max_steps());
                let rewarding: usize = t.steps.iter().map(|s| s.tags.rewarding_count()).sum();
                assert_eq!(t.total_return(), rewarding as f64 * GOAL_REWARD as f64);
                assert_eq!(t.resimulate().unwrap(), t);
                assert_eq!(EpisodeTranscript::decode(&t.encode()).unwrap(), t);
            }
        }
    }
}

#[test]
fn episodes_end_by_the_cap() {
    for family in FAMILIES {
        let (env, _) = reset(family, 4, &ShiftConfig::train(family)).unwrap();
        let mut env = env.with_max_steps(7);
        let noop = family.num_actions() - 1;
        let mut last = None;
        while !env.is_done() {
            last = Some(env.step(noop).unwrap());
        }
        assert!(env.steps() <= 7);
        let last = last.unwrap();
        if env.steps() == 7 {
            assert!(last.tags.contains(EventTag::Timeout));
        }
    }
}
