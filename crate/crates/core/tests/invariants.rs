//! Property tests over the public API.

mod common;

use narrative_mobility::engine::{self, random_plan, Ablation, Environment};
use narrative_mobility::eval::Distribution;
use narrative_mobility::geo::haversine_m;
use narrative_mobility::ingest::{ingest_diary_text, DiaryEntry, RawDiary};
use narrative_mobility::meo::MeoTable;
use narrative_mobility::rng::RngStream;
use narrative_mobility::spatial::ActivityPoiMap;
use narrative_mobility::time::TimeOfDay;
use narrative_mobility::types::{AgentState, MemoryEvent, MemoryKind, PoiId, Vocabulary};
use proptest::prelude::*;

proptest! {
    #[test]
    fn clock_text_round_trips(slot in 0u8..96) {
        let t = TimeOfDay::from_slot(slot).unwrap();
        prop_assert_eq!(TimeOfDay::parse(&t.to_string()).unwrap(), t);
        prop_assert_eq!(t.minutes() % 15, 0);
    }

    #[test]
    fn snapping_picks_a_nearest_slot(minutes in 0u16..1440) {
        let t = TimeOfDay::nearest(minutes);
        let dist = (i32::from(t.minutes()) - i32::from(minutes)).abs();
        prop_assert!(dist <= 8 || minutes > 23 * 60 + 45);
    }

    #[test]
    fn streams_replay(seed: u64, agent in "[a-z0-9]{1,8}", day in 0u32..30) {
        let mut a = RngStream::new(seed, &agent, day);
        let mut b = RngStream::new(seed, &agent, day);
        for _ in 0..32 {
            prop_assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn memory_never_exceeds_cap(cap in 0usize..15, pushes in 0usize..40) {
        let mut s = AgentState::new(PoiId::new("home"), cap);
        for i in 0..pushes {
            s.remember(MemoryEvent { time: TimeOfDay::MIDNIGHT, kind: MemoryKind::Executed, summary: i.to_string() });
            prop_assert!(s.memory_len() <= cap);
        }
        if cap > 0 && pushes > 0 {
            prop_assert_eq!(&s.memory().next().unwrap().summary, &(pushes - 1).to_string());
        }
    }

    #[test]
    fn random_plans_are_valid(seed: u64) {
        let vocab = Vocabulary::default();
        let plan = random_plan(&mut RngStream::new(seed, "p", 0), &vocab, &ActivityPoiMap::default());
        let acts = plan.activities();
        prop_assert!(acts[0].intention.is_sleep() && acts[0].start == TimeOfDay::MIDNIGHT);
        prop_assert!((4..=9).contains(&acts.len()));
        prop_assert!(acts.windows(2).all(|w| w[0].start <= w[1].start));
        prop_assert!(acts.iter().all(|a| vocab.contains(&a.intention)));
    }

    #[test]
    fn counts_make_distributions(counts in prop::collection::vec(0u32..50, 1..30)) {
        let c: Vec<f64> = counts.iter().map(|x| f64::from(*x)).collect();
        let labels = (0..c.len()).map(|i| i.to_string()).collect();
        let d = Distribution::from_counts(labels, &c, 1e-9);
        prop_assert!((d.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(d.probabilities.iter().all(|p| *p >= 0.0));
    }

    #[test]
    fn ingest_accounts_for_every_line(
        lines in prop::collection::vec(
            (
                prop::sample::select(vec!["sleep", "eating", "work_study", "teleporting"]),
                0u16..1500,
                prop::sample::select(vec!["home-001", "shop-001", "office-001"]),
                prop::option::of(prop::sample::select(vec!["walk", "car", "hovercraft"])),
            ),
            0..6,
        ),
        garbage in prop::bool::ANY,
    ) {
        let entries: Vec<DiaryEntry> = lines
            .iter()
            .map(|(i, m, p, mode)| DiaryEntry {
                intention: i.to_string(),
                start: format!("{:02}:{:02}", m / 60, m % 60),
                poi_id: Some(p.to_string()),
                lat: Some(23.1),
                lon: Some(113.3),
                mode: mode.map(str::to_string),
                arrive: None,
            })
            .collect();
        let mut text = serde_json::to_string(&RawDiary { agent_id: "x".into(), day: 0, entries }).unwrap() + "\n";
        if garbage {
            text.push_str("{not json\n");
        }
        let (diaries, report) = ingest_diary_text(&text, &Vocabulary::default(), None);
        prop_assert_eq!(report.accepted + report.rejected.len(), report.input);
        prop_assert_eq!(diaries.len(), report.accepted);
        for d in &diaries {
            prop_assert!(d.to_trajectory().validate().is_ok());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn simulated_days_are_valid_and_prism_feasible(
        seed: u64,
        meo in 0.0f64..=1.0,
        agent in 0usize..100,
        ablation in prop::sample::select(Ablation::ALL.to_vec()),
    ) {
        let (mut config, _, profiles) = common::load_world("config.json");
        config.seed = seed;
        config.meo_table = MeoTable::uniform(meo);
        ablation.apply(&mut config);
        let mut env = Environment::load(config).unwrap();
        env.register_occupations(&profiles);
        let run = engine::simulate_agent(&profiles[agent], 0, &env).unwrap();
        let t = &run.trajectory;
        prop_assert!(t.validate().is_ok(), "{:?}", t.validate());
        prop_assert_eq!(t.records[0].place.poi_id.as_str(), profiles[agent].home_poi.as_str());
        for (prev, next) in t.trips() {
            let d = haversine_m(prev.place.point, next.place.point);
            let need = env.config.mode_speeds.travel_slots(d, next.mode.unwrap()).max(1);
            prop_assert!(next.arrive.slots_since(next.start) >= need);
            prop_assert!(env.config.mode_speeds.speed(next.mode.unwrap()) > 0.0);
        }
        let again = engine::simulate_agent(&profiles[agent], 0, &env).unwrap();
        prop_assert_eq!(&again.trajectory, t);
    }
}
