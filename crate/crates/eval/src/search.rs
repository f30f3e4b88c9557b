//! Greedy pyramid search for the best ordered view-orientation triple:
//! every single view, then ordered pairs of the best singles, then ordered
//! triples grown from the best pairs.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::{Display, Write as _};

use gestigo_core::VoName;

use crate::error::{EvalError, Result};

pub const DEFAULT_TOP_K_SINGLES: usize = 3;
pub const DEFAULT_TOP_K_PAIRS: usize = 3;

/// Trainings performed, per tuple length.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SearchBudget {
    pub singles: usize,
    pub pairs: usize,
    pub triples: usize,
}

impl SearchBudget {
    pub fn total(&self) -> usize {
        self.singles + self.pairs + self.triples
    }
}

/// Every accuracy measured so far. A tuple is never trained twice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VoSearchState {
    pub singles: BTreeMap<VoName, f64>,
    pub pairs: BTreeMap<[VoName; 2], f64>,
    pub triples: BTreeMap<[VoName; 3], f64>,
    pub budget: SearchBudget,
}

fn list(vos: &[VoName]) -> String {
    vos.iter().map(|v| v.as_str()).collect::<Vec<_>>().join(",")
}

/// Higher accuracy first; equal accuracies in lexicographic order of the
/// view names.
fn rank(a: &(Vec<VoName>, f64), b: &(Vec<VoName>, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| {
        let names = |v: &[VoName]| v.iter().map(|x| x.as_str()).collect::<Vec<_>>();
        names(&a.0).cmp(&names(&b.0))
    })
}

impl VoSearchState {
    pub fn get(&self, vos: &[VoName]) -> Option<f64> {
        match *vos {
            [a] => self.singles.get(&a).copied(),
            [a, b] => self.pairs.get(&[a, b]).copied(),
            [a, b, c] => self.triples.get(&[a, b, c]).copied(),
            _ => None,
        }
    }

    fn insert(&mut self, vos: &[VoName], acc: f64) {
        match *vos {
            [a] => {
                self.singles.insert(a, acc);
                self.budget.singles += 1;
            }
            [a, b] => {
                self.pairs.insert([a, b], acc);
                self.budget.pairs += 1;
            }
            [a, b, c] => {
                self.triples.insert([a, b, c], acc);
                self.budget.triples += 1;
            }
            _ => unreachable!("tuples have 1 to 3 views"),
        }
    }

    /// Looks the tuple up, training it first if it is new.
    fn measure<E: Display>(&mut self, vos: &[VoName], trainer: &mut impl FnMut(&[VoName]) -> Result<f64, E>) -> Result<f64> {
        if let Some(acc) = self.get(vos) {
            return Ok(acc);
        }
        let acc = trainer(vos).map_err(|e| EvalError::Trainer {
            vos: list(vos),
            detail: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&acc) {
            return Err(EvalError::Trainer {
                vos: list(vos),
                detail: format!("accuracy {acc} outside [0, 1]"),
            });
        }
        log::info!("{}: {acc:.4}", list(vos));
        self.insert(vos, acc);
        Ok(acc)
    }

    /// One line per measured tuple: `kind<TAB>views<TAB>accuracy`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let b = &self.budget;
        writeln!(s, "# trainings: {} singles, {} pairs, {} triples", b.singles, b.pairs, b.triples).unwrap();
        for (v, acc) in &self.singles {
            writeln!(s, "single\t{}\t{acc}", v.as_str()).unwrap();
        }
        for (v, acc) in &self.pairs {
            writeln!(s, "pair\t{}\t{acc}", list(v)).unwrap();
        }
        for (v, acc) in &self.triples {
            writeln!(s, "triple\t{}\t{acc}", list(v)).unwrap();
        }
        s
    }

    /// Reads [`VoSearchState::to_text`] output, so a search can resume.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |detail: String| EvalError::Parse {
            what: "search state",
            detail,
        };
        let mut state = VoSearchState::default();
        for line in text.lines().filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let cols: Vec<&str> = line.split('\t').collect();
            let [kind, vos, acc] = cols[..] else {
                return Err(bad(format!("line `{line}`")));
            };
            let vos = VoName::parse_list(vos).map_err(|e| bad(e.to_string()))?;
            let acc: f64 = acc.parse().map_err(|_| bad(format!("accuracy `{acc}`")))?;
            let len = match kind {
                "single" => 1,
                "pair" => 2,
                "triple" => 3,
                _ => return Err(bad(format!("kind `{kind}`"))),
            };
            let distinct = vos.iter().enumerate().all(|(i, v)| !vos[i + 1..].contains(v));
            if vos.len() != len || !distinct || !(0.0..=1.0).contains(&acc) {
                return Err(bad(format!("line `{line}`")));
            }
            state.insert(&vos, acc);
        }
        Ok(state)
    }
}

fn permutations(items: &[VoName]) -> Vec<Vec<VoName>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

fn top(mut scored: Vec<(Vec<VoName>, f64)>, k: usize) -> Vec<Vec<VoName>> {
    scored.sort_by(rank);
    scored.into_iter().take(k).map(|(v, _)| v).collect()
}

/// Runs the four-step search over `candidates` and returns the winning
/// ordered triple.
///
/// `trainer` trains a model on the given views from scratch and returns
/// its validation accuracy. Results accumulate in `state`, which is left
/// holding everything measured so far if a training fails; passing that
/// state back in resumes the search without repeating work.
pub fn vo_search<E: Display>(
    candidates: &[VoName],
    top_k_singles: usize,
    top_k_pairs: usize,
    state: &mut VoSearchState,
    mut trainer: impl FnMut(&[VoName]) -> Result<f64, E>,
) -> Result<[VoName; 3]> {
    let distinct = candidates.iter().enumerate().all(|(i, v)| !candidates[i + 1..].contains(v));
    if candidates.len() < 3 || !distinct {
        return Err(EvalError::Argument(format!(
            "need at least three distinct candidate views, got [{}]",
            list(candidates)
        )));
    }
    if top_k_singles < 3 || top_k_pairs == 0 {
        return Err(EvalError::Argument(format!(
            "top_k_singles must be at least 3 and top_k_pairs at least 1 (got {top_k_singles}, {top_k_pairs})"
        )));
    }

    // Step 1: every view alone.
    let mut singles = Vec::new();
    for &v in candidates {
        singles.push((vec![v], state.measure(&[v], &mut trainer)?));
    }
    let best_singles: Vec<VoName> = top(singles, top_k_singles).into_iter().map(|v| v[0]).collect();

    // Step 2: every ordering of every pair of the best singles.
    let mut pairs = Vec::new();
    for (i, &a) in best_singles.iter().enumerate() {
        for &b in &best_singles[i + 1..] {
            for p in permutations(&[a, b]) {
                let acc = state.measure(&p, &mut trainer)?;
                pairs.push((p, acc));
            }
        }
    }
    let best_pairs = top(pairs, top_k_pairs);

    // Step 3: each best pair plus one more of the best singles, in every
    // order.
    let mut triples: Vec<(Vec<VoName>, f64)> = Vec::new();
    for pair in &best_pairs {
        for &c in best_singles.iter().filter(|c| !pair.contains(c)) {
            for t in permutations(&[pair[0], pair[1], c]) {
                if triples.iter().all(|(seen, _)| *seen != t) {
                    let acc = state.measure(&t, &mut trainer)?;
                    triples.push((t, acc));
                }
            }
        }
    }

    // Step 4: the best triple.
    let best = top(triples, 1).remove(0);
    Ok([best[0], best[1], best[2]])
}
