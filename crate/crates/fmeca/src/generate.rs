//! Seeded random FMECA models for experiments and acceptance suites.
//!
//! Every action mitigates exactly one failure mode, so generated models only
//! contain one-to-one and complementary relations.

use std::collections::BTreeMap;

use fmeca_core::{Component, Cost, Deltas, FailureMode, FmecaModel, PreventiveAction, Rank};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::document::ModelDocument;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOptions {
    pub failure_modes: usize,
    pub actions: usize,
    pub seed: u64,
    /// Plant a configuration that meets every threshold within budget.
    pub feasible: bool,
    /// With `feasible`, the budget is the planted cost times `1 + slack`,
    /// given as a fraction.
    pub slack: (i64, i64),
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        GeneratorOptions {
            failure_modes: 1,
            actions: 2,
            seed: 0,
            feasible: false,
            slack: (1, 4),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerateError {
    #[error("need at least one failure mode and one action")]
    Empty,
    #[error("slack must be a non-negative fraction")]
    Slack,
}

fn width(n: usize) -> usize {
    n.to_string().len().max(2)
}

/// Residual criticality of `fm` under the summed reductions of `chosen`.
fn residual(fm: &FailureMode, chosen: &[Deltas]) -> u32 {
    let reduce = |rank: Rank, total: u32| u32::from(rank.value()).saturating_sub(total).max(1);
    let (s, o, d) = chosen.iter().fold((0u32, 0u32, 0u32), |acc, x| {
        (
            acc.0 + u32::from(x.severity),
            acc.1 + u32::from(x.occurrence),
            acc.2 + u32::from(x.detectability),
        )
    });
    reduce(fm.severity, s) * reduce(fm.occurrence, o) * reduce(fm.detectability, d)
}

pub fn generate(options: &GeneratorOptions) -> Result<ModelDocument, GenerateError> {
    let (n, m) = (options.failure_modes, options.actions);
    if n == 0 || m == 0 {
        return Err(GenerateError::Empty);
    }
    if options.slack.0 < 0 || options.slack.1 <= 0 {
        return Err(GenerateError::Slack);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (fw, aw) = (width(n), width(m));
    let component_count = n.div_ceil(3);
    let cw = width(component_count);

    let mut model = FmecaModel::empty();
    model.components = (1..=component_count)
        .map(|c| Component {
            id: format!("C{c:0cw$}"),
            description: String::new(),
            default_threshold: None,
        })
        .collect();
    for i in 0..n {
        model.failure_modes.push(FailureMode {
            id: format!("F{:0fw$}", i + 1),
            component_id: model.components[i / 3].id.clone(),
            function: String::new(),
            description: String::new(),
            causes: String::new(),
            effects: String::new(),
            severity: Rank::new(rng.random_range(1..=4)),
            occurrence: Rank::new(rng.random_range(1..=4)),
            detectability: Rank::new(rng.random_range(1..=4)),
            critical_threshold: 0,
            recommended_actions: Vec::new(),
            alternative_groups: Vec::new(),
        });
    }

    // The first n actions give each failure mode one; the rest land anywhere.
    let mut owner = Vec::with_capacity(m);
    let mut deltas = Vec::with_capacity(m);
    for j in 0..m {
        let g = if j < n { j } else { rng.random_range(0..n) };
        let mut d = [
            rng.random_range(0..=2u8),
            rng.random_range(0..=2u8),
            rng.random_range(0..=2u8),
        ];
        if d == [0, 0, 0] {
            d[rng.random_range(0..3)] = 1;
        }
        let id = format!("A{:0aw$}", j + 1);
        let cost = Cost::from(rng.random_range(1..=20i64));
        model.failure_modes[g].recommended_actions.push(id.clone());
        model.actions.push(PreventiveAction {
            id,
            description: String::new(),
            cost,
            mitigations: BTreeMap::from([(model.failure_modes[g].id.clone(), Deltas::new(d[0], d[1], d[2]))]),
        });
        owner.push(g);
        deltas.push(Deltas::new(d[0], d[1], d[2]));
    }

    let mut planted_cost = Cost::ZERO;
    for g in 0..n {
        let own: Vec<usize> = (0..m).filter(|&j| owner[j] == g).collect();
        let initial = model.failure_modes[g].initial_criticality();
        let fm = &model.failure_modes[g];
        let threshold = if options.feasible {
            // Plant a random non-empty subset; its residual bounds the threshold.
            let reach = if own.is_empty() {
                initial
            } else {
                let k = rng.random_range(1..=own.len());
                let picked: Vec<usize> = sample(&mut rng, own.len(), k).into_iter().map(|i| own[i]).collect();
                let chosen: Vec<Deltas> = picked.iter().map(|&j| deltas[j]).collect();
                planted_cost += picked.iter().map(|&j| model.actions[j].cost).sum::<Cost>();
                residual(fm, &chosen)
            };
            let top = if reach < initial { initial - 1 } else { initial };
            rng.random_range(reach..=top)
        } else {
            rng.random_range(1..=initial)
        };
        model.failure_modes[g].critical_threshold = threshold;
    }

    model.budget = if options.feasible {
        let (num, den) = options.slack;
        planted_cost
            + Cost::new(
                planted_cost.numer() * i128::from(num),
                planted_cost.denom() * i128::from(den),
            )
    } else {
        let total: Cost = model.actions.iter().map(|a| a.cost).sum();
        Cost::new(total.numer(), total.denom() * 2)
    };

    let mut document = ModelDocument::new(model);
    document
        .metadata
        .insert("generator.seed".into(), options.seed.to_string());
    document.metadata.insert(
        "generator.shape".into(),
        format!(
            "{n} failure modes, {m} actions{}",
            if options.feasible { ", feasible" } else { "" }
        ),
    );
    document.canonicalize();
    Ok(document)
}
