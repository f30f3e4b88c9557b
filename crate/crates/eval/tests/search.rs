use std::cell::RefCell;
use std::collections::HashMap;

use gestigo_core::VoName;
use gestigo_eval::{vo_search, EvalError, VoSearchState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Table = HashMap<Vec<VoName>, f64>;

fn ordered_tuples(len: usize) -> Vec<Vec<VoName>> {
    let mut out: Vec<Vec<VoName>> = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|t| {
                VoName::ALL.iter().filter(|v| !t.contains(v)).map(|v| {
                    let mut next = t.clone();
                    next.push(*v);
                    next
                }).collect::<Vec<_>>()
            })
            .collect();
    }
    out
}

/// Accuracies on a coarse grid so ties are common.
fn random_table(seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=3)
        .flat_map(ordered_tuples)
        .map(|t| (t, rng.gen_range(0..=40) as f64 / 40.0))
        .collect()
}

/// Brute force over all 120 ordered triples, ties to the lexicographically
/// smallest name list.
fn exhaustive(table: &Table) -> Vec<VoName> {
    let key = |t: &Vec<VoName>| t.iter().map(|v| v.as_str().to_string()).collect::<Vec<_>>();
    let mut best: Option<Vec<VoName>> = None;
    for t in ordered_tuples(3) {
        best = match best {
            None => Some(t),
            Some(b) => {
                let (ta, ba) = (table[&t], table[&b]);
                if ta > ba || (ta == ba && key(&t) < key(&b)) {
                    Some(t)
                } else {
                    Some(b)
                }
            }
        };
    }
    best.unwrap()
}

fn lookup(table: &Table) -> impl FnMut(&[VoName]) -> Result<f64, String> + '_ {
    |vos| Ok(table[vos])
}

#[test]
fn full_width_search_equals_exhaustive_argmax() {
    for seed in 0..100 {
        let table = random_table(seed);
        let mut state = VoSearchState::default();
        let got = vo_search(&VoName::ALL, 6, usize::MAX, &mut state, lookup(&table)).unwrap();
        assert_eq!(got.to_vec(), exhaustive(&table), "table {seed}");
    }
}

#[test]
fn dominant_triple_wins() {
    use VoName::*;
    let mut table: Table = (1..=3).flat_map(ordered_tuples).map(|t| (t, 0.5)).collect();
    for s in [Custom, TopDown, FrontAway] {
        table.insert(vec![s], 0.7);
    }
    table.insert(vec![Custom, TopDown], 0.8);
    table.insert(vec![Custom, TopDown, FrontAway], 0.95);
    let mut state = VoSearchState::default();
    let got = vo_search(&VoName::ALL, 3, 3, &mut state, lookup(&table)).unwrap();
    assert_eq!(got, [Custom, TopDown, FrontAway]);
}

#[test]
fn equal_accuracies_break_by_name() {
    let table: Table = (1..=3).flat_map(ordered_tuples).map(|t| (t, 0.5)).collect();
    let mut state = VoSearchState::default();
    let got = vo_search(&VoName::ALL, 3, 3, &mut state, lookup(&table)).unwrap();
    // Names in order: custom, front-away, front-to, side-left, side-right, top-down.
    assert_eq!(got, [VoName::Custom, VoName::FrontAway, VoName::FrontTo]);
}

#[test]
fn default_widths_budget_and_memoization() {
    let table = random_table(7);
    let calls = RefCell::new(Vec::new());
    let trainer = |vos: &[VoName]| -> Result<f64, String> {
        calls.borrow_mut().push(vos.to_vec());
        Ok(table[vos])
    };
    let mut state = VoSearchState::default();
    let first = vo_search(&VoName::ALL, 3, 3, &mut state, trainer).unwrap();
    let seen = calls.borrow().clone();
    let mut unique = seen.clone();
    unique.sort();
    unique.dedup();
    assert_eq!(unique.len(), seen.len(), "a tuple was trained twice");
    // Three best singles give 6 ordered pairs and one combination of three.
    assert_eq!((state.budget.singles, state.budget.pairs, state.budget.triples), (6, 6, 6));
    assert_eq!(state.budget.total(), seen.len());
    for t in state.triples.keys() {
        assert!(t[0] != t[1] && t[1] != t[2] && t[0] != t[2]);
    }

    let again = vo_search(&VoName::ALL, 3, 3, &mut state, |vos: &[VoName]| -> Result<f64, String> {
        panic!("retrained {vos:?}")
    })
    .unwrap();
    assert_eq!(again, first);
}

#[test]
fn failure_keeps_partial_state_and_resume_finishes() {
    let table = random_table(11);
    let mut remaining = 8;
    let mut state = VoSearchState::default();
    let err = vo_search(&VoName::ALL, 3, 3, &mut state, |vos: &[VoName]| {
        if remaining == 0 {
            return Err("out of memory".to_string());
        }
        remaining -= 1;
        Ok(table[vos])
    })
    .unwrap_err();
    assert!(matches!(err, EvalError::Trainer { .. }));
    assert_eq!(state.budget.total(), 8);
    assert_eq!(state.singles.len(), 6);

    let resumed = VoSearchState::parse(&state.to_text()).unwrap();
    assert_eq!(resumed.singles, state.singles);
    assert_eq!(resumed.pairs, state.pairs);
    let mut state = resumed;
    let got = vo_search(&VoName::ALL, 3, 3, &mut state, lookup(&table)).unwrap();
    let mut fresh = VoSearchState::default();
    assert_eq!(got, vo_search(&VoName::ALL, 3, 3, &mut fresh, lookup(&table)).unwrap());
    assert_eq!(state.triples, fresh.triples);
}

#[test]
fn rejects_bad_accuracies_and_arguments() {
    let mut state = VoSearchState::default();
    let err = vo_search(&VoName::ALL, 3, 3, &mut state, |_: &[VoName]| Ok::<_, String>(1.5));
    assert!(matches!(err, Err(EvalError::Trainer { .. })));
    assert!(state.singles.is_empty());
    let ok = |_: &[VoName]| Ok::<_, String>(0.5);
    assert!(vo_search(&VoName::ALL[..2], 3, 3, &mut state, ok).is_err());
    assert!(vo_search(&VoName::ALL, 2, 3, &mut state, ok).is_err());
    assert!(vo_search(&VoName::ALL, 3, 0, &mut state, ok).is_err());
    let dup = [VoName::Custom, VoName::Custom, VoName::TopDown];
    assert!(vo_search(&dup, 3, 3, &mut state, ok).is_err());
}

#[test]
fn state_text_rejects_duplicate_views() {
    assert!(VoSearchState::parse("pair\tcustom,custom\t0.5\n").is_err());
    assert!(VoSearchState::parse("triple\tcustom,top-down\t0.5\n").is_err());
    assert!(VoSearchState::parse("single\tcustom\t1.5\n").is_err());
    let s = VoSearchState::parse("# x\nsingle\tcustom\t0.25\n").unwrap();
    assert_eq!(s.get(&[VoName::Custom]), Some(0.25));
}
