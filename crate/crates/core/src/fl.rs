//! Federated averaging over simulated clients, label-flip poisoning, and
//! Monte Carlo estimation of the accuracy table.
//!
//! A run follows the usual loop: the server broadcasts the global weights,
//! every admitted client trains a copy on its own (possibly poisoned) data
//! with a fresh RMSprop state, and the server replaces the global weights
//! by the mean of the returned copies. After the last round the global
//! model is scored on clean held-out data gathered at all `n` client
//! locations.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::{index, SliceRandom};
use rand::Rng;

use crate::error::{check_probability, Error, Result};
use crate::nn::{self, Architecture, Example, Mode, ModelParams, OptimizerState, RmsProp};
use crate::seed::{self, Stream};
use crate::signal::{self, ChannelConfig, Dataset, SpectrumSample};
pub use crate::table::{cell_count, cells, AccuracyTable, CHANCE_ACCURACY};

/// Training schedule for one federated run.
#[derive(Debug, Clone, PartialEq)]
pub struct FlConfig {
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub samples_per_client: usize,
    pub test_samples: usize,
    /// Probability of a QPSK label when generating data.
    pub label_balance: f64,
    /// Share of a poisoned client's labels that are flipped.
    pub flip_fraction: f64,
    pub optimizer: RmsProp,
    pub architecture: Architecture,
    pub master_seed: u64,
}

impl Default for FlConfig {
    fn default() -> Self {
        FlConfig::paper()
    }
}

impl FlConfig {
    /// 100 rounds, 1000 samples per client, 1000 test samples.
    pub fn paper() -> Self {
        FlConfig {
            rounds: 100,
            local_epochs: 1,
            batch_size: 32,
            samples_per_client: 1000,
            test_samples: 1000,
            label_balance: 0.5,
            flip_fraction: 1.0,
            optimizer: RmsProp::default(),
            architecture: Architecture::signal_classifier(),
            master_seed: 0,
        }
    }

    /// CI scale: 20 rounds and 200 samples per client.
    pub fn fast() -> Self {
        FlConfig {
            rounds: 20,
            samples_per_client: 200,
            ..FlConfig::paper()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("rounds", self.rounds),
            ("local_epochs", self.local_epochs),
            ("batch_size", self.batch_size),
            ("samples_per_client", self.samples_per_client),
            ("test_samples", self.test_samples),
        ];
        for (what, v) in sizes {
            if v == 0 {
                return Err(Error::Config(alloc::format!("{what} must be at least 1")));
            }
        }
        check_probability("label_balance", self.label_balance)?;
        check_probability("flip_fraction", self.flip_fraction)?;
        self.optimizer.validate()?;
        self.architecture.validate()?;
        if self.architecture.input_size != signal::FEATURES || self.architecture.output_size != 2 {
            return Err(Error::Config(
                "classifier must map 32 features to 2 classes".into(),
            ));
        }
        Ok(())
    }
}

/// Which of the `n` clients (numbered from 0) are admitted and which are poisoned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Roster {
    n: usize,
    admitted: Vec<usize>,
    poisoned: Vec<usize>,
}

impl Roster {
    pub fn new(n: usize, mut admitted: Vec<usize>, mut poisoned: Vec<usize>) -> Result<Self> {
        for list in [&mut admitted, &mut poisoned] {
            list.sort_unstable();
            list.dedup();
            if let Some(&bad) = list.iter().find(|&&c| c >= n) {
                return Err(Error::OutOfRange {
                    what: "client id",
                    value: bad as f64,
                });
            }
        }
        Ok(Roster {
            n,
            admitted,
            poisoned,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn admitted(&self) -> &[usize] {
        &self.admitted
    }

    pub fn poisoned(&self) -> &[usize] {
        &self.poisoned
    }

    pub fn is_poisoned(&self, client: usize) -> bool {
        self.poisoned.binary_search(&client).is_ok()
    }

    /// `k`: poisoned clients among the admitted ones.
    pub fn poisoned_admitted(&self) -> usize {
        self.admitted
            .iter()
            .filter(|&&c| self.is_poisoned(c))
            .count()
    }
}

fn flip_count(len: usize, flip_fraction: f64) -> usize {
    let x = flip_fraction * len as f64;
    let nearest = libm::round(x);
    let count = if libm::fabs(x - nearest) < 1e-9 {
        nearest
    } else {
        libm::ceil(x)
    };
    (count as usize).min(len)
}

/// Flips the labels of a uniformly random `ceil(flip_fraction * |d|)` subset.
pub fn poison_labels(d: &Dataset, flip_fraction: f64, seed: u64) -> Result<Dataset> {
    check_probability("flip_fraction", flip_fraction)?;
    let mut out = d.clone();
    let count = flip_count(d.len(), flip_fraction);
    let mut rng = seed::rng(seed, Stream::Poison, &[]);
    let samples = out.samples_mut();
    for j in index::sample(&mut rng, samples.len(), count) {
        samples[j].label = samples[j].label.flipped();
    }
    Ok(out)
}

/// Element-wise mean of the client models.
pub fn federated_average(models: &[ModelParams]) -> Result<ModelParams> {
    let first = models.first().ok_or(Error::Empty("model list"))?;
    for m in &models[1..] {
        if m.arch() != first.arch() || m.len() != first.len() {
            return Err(Error::Length {
                what: "client model",
                expected: first.len(),
                actual: m.len(),
            });
        }
    }
    let mut sum = vec![0.0; first.len()];
    for m in models {
        for (s, v) in sum.iter_mut().zip(m.values()) {
            *s += v;
        }
    }
    let scale = models.len() as f64;
    for s in &mut sum {
        *s /= scale;
    }
    ModelParams::from_values(first.arch().clone(), sum)
}

fn as_example(s: &SpectrumSample) -> Example<'_> {
    (&s.features[..], s.label.index())
}

/// One pass over `data` in shuffled mini-batches. Returns the mean batch loss.
pub fn train_epoch<R: Rng + ?Sized>(
    params: &mut ModelParams,
    state: &mut OptimizerState,
    data: &[SpectrumSample],
    batch_size: usize,
    rng: &mut R,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if batch_size == 0 {
        return Err(Error::Config("batch_size must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    order.shuffle(rng);
    let mut batch: Vec<Example<'_>> = Vec::with_capacity(batch_size);
    let mut losses = 0.0;
    let mut batches = 0;
    for chunk in order.chunks(batch_size) {
        batch.clear();
        batch.extend(chunk.iter().map(|&j| as_example(&data[j])));
        let (loss, grad) = nn::loss_and_grad(params, &batch, Mode::Train, rng)?;
        nn::rmsprop_step(params.values_mut(), &grad, state)?;
        losses += loss;
        batches += 1;
    }
    Ok(losses / batches as f64)
}

pub fn evaluate(params: &ModelParams, data: &Dataset) -> Result<f64> {
    nn::accuracy(params, data.samples().iter().map(as_example))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlOutcome {
    /// Test accuracy of the final global model.
    pub accuracy: f64,
    pub params: ModelParams,
}

/// Runs federated averaging for `cfg.rounds` rounds over the admitted clients.
///
/// Poisoned clients keep the same flipped labels for the whole run. With no
/// admitted client the server trains nothing and scores chance accuracy.
pub fn run_fl(roster: &Roster, cfg: &FlConfig, channel: &ChannelConfig) -> Result<FlOutcome> {
    cfg.validate()?;
    channel.validate()?;
    if roster.n() == 0 {
        return Err(Error::Empty("client population"));
    }
    let master = cfg.master_seed;
    let init = ModelParams::glorot(
        cfg.architecture.clone(),
        &mut seed::rng(master, Stream::Init, &[]),
    );
    if roster.admitted().is_empty() {
        return Ok(FlOutcome {
            accuracy: CHANCE_ACCURACY,
            params: init,
        });
    }

    let mut local_data = Vec::with_capacity(roster.admitted().len());
    for &client in roster.admitted() {
        let clean = signal::generate_client_dataset(
            client,
            cfg.samples_per_client,
            channel,
            cfg.label_balance,
        )?;
        let data = if roster.is_poisoned(client) {
            let poison_seed = seed::derive(master, Stream::Poison, &[client as u64]);
            poison_labels(&clean, cfg.flip_fraction, poison_seed)?
        } else {
            clean
        };
        local_data.push((client, data));
    }
    let test =
        signal::generate_test_dataset(roster.n(), cfg.test_samples, channel, cfg.label_balance)?;

    let mut global = init;
    let mut locals = Vec::with_capacity(local_data.len());
    for round in 0..cfg.rounds {
        locals.clear();
        for (client, data) in &local_data {
            let mut params = global.clone();
            let mut state = OptimizerState::new(params.len(), cfg.optimizer)?;
            let mut rng = seed::rng(master, Stream::Training, &[round as u64, *client as u64]);
            for _ in 0..cfg.local_epochs {
                train_epoch(
                    &mut params,
                    &mut state,
                    data.samples(),
                    cfg.batch_size,
                    &mut rng,
                )?;
            }
            locals.push(params);
        }
        global = federated_average(&locals)?;
    }
    Ok(FlOutcome {
        accuracy: evaluate(&global, &test)?,
        params: global,
    })
}

/// Roster of Monte Carlo trial `trial` for the cell `(i, k)`.
///
/// Each trial draws one random ordering of the clients and one random
/// poisoning order; cell `(i, k)` admits the first `i` clients of the first
/// ordering and poisons the `k` of those that come first in the second. Every
/// cell therefore sees a uniformly random admitted set and a uniformly
/// random poisoned subset of it, while cells of the same trial are nested.
pub fn trial_roster(
    n: usize,
    i: usize,
    k: usize,
    trial: usize,
    master_seed: u64,
) -> Result<Roster> {
    if k > i || i > n {
        return Err(Error::Config(alloc::format!(
            "no cell (i = {i}, k = {k}) for n = {n}"
        )));
    }
    let mut rng = seed::rng(master_seed, Stream::Roster, &[trial as u64]);
    let mut admission: Vec<usize> = (0..n).collect();
    admission.shuffle(&mut rng);
    let mut poison_rank: Vec<usize> = (0..n).collect();
    poison_rank.shuffle(&mut rng);
    let mut admitted: Vec<usize> = admission[..i].to_vec();
    admitted.sort_by_key(|&c| poison_rank[c]);
    let poisoned = admitted[..k].to_vec();
    Roster::new(n, admitted, poisoned)
}

/// Channel and training seeds of a trial. All cells of one trial share the
/// client placement, data and training randomness; only the roster differs.
pub fn trial_setup(
    trial: usize,
    cfg: &FlConfig,
    channel: &ChannelConfig,
) -> (FlConfig, ChannelConfig) {
    let mut trial_cfg = cfg.clone();
    trial_cfg.master_seed = seed::derive(cfg.master_seed, Stream::Trial, &[trial as u64]);
    let mut trial_channel = channel.clone();
    trial_channel.seed = seed::derive(channel.seed, Stream::Deployment, &[trial as u64]);
    (trial_cfg, trial_channel)
}

/// Accuracy of one `(i, k, trial)` Monte Carlo cell. `(0, 0)` is chance.
pub fn run_cell(
    n: usize,
    i: usize,
    k: usize,
    trial: usize,
    cfg: &FlConfig,
    channel: &ChannelConfig,
) -> Result<f64> {
    if i == 0 {
        return Ok(CHANCE_ACCURACY);
    }
    let roster = trial_roster(n, i, k, trial, cfg.master_seed)?;
    let (trial_cfg, trial_channel) = trial_setup(trial, cfg, channel);
    Ok(run_fl(&roster, &trial_cfg, &trial_channel)?.accuracy)
}

/// Every `(i, k, trial)` job of a table, cell-major then trial.
pub fn table_jobs(n: usize, trials: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    cells(n).flat_map(move |(i, k)| (0..trials).map(move |t| (i, k, t)))
}

/// Averages per-job accuracies listed in [`table_jobs`] order.
pub fn assemble_table(
    n: usize,
    trials: usize,
    master_seed: u64,
    accuracies: &[f64],
) -> Result<AccuracyTable> {
    if trials == 0 {
        return Err(Error::Empty("trials"));
    }
    if accuracies.len() != cell_count(n) * trials {
        return Err(Error::Length {
            what: "cell results",
            expected: cell_count(n) * trials,
            actual: accuracies.len(),
        });
    }
    let entries = accuracies
        .chunks(trials)
        .zip(cells(n))
        .map(|(runs, (i, _))| {
            if i == 0 {
                CHANCE_ACCURACY
            } else {
                runs.iter().sum::<f64>() / trials as f64
            }
        })
        .collect();
    let mut table = AccuracyTable::new(n, entries)?;
    table.trials = trials;
    table.seed = master_seed;
    Ok(table)
}

/// Rejects table campaigns that cannot run.
pub fn check_campaign(
    n: usize,
    trials: usize,
    cfg: &FlConfig,
    channel: &ChannelConfig,
) -> Result<()> {
    if n == 0 {
        return Err(Error::Empty("client population"));
    }
    if trials == 0 {
        return Err(Error::Empty("trials"));
    }
    cfg.validate()?;
    channel.validate()
}

/// Sequential Monte Carlo estimate of `U(k|i)` for all `0 <= k <= i <= n`.
pub fn estimate_table(
    n: usize,
    trials: usize,
    cfg: &FlConfig,
    channel: &ChannelConfig,
) -> Result<AccuracyTable> {
    check_campaign(n, trials, cfg, channel)?;
    let accuracies = table_jobs(n, trials)
        .map(|(i, k, t)| run_cell(n, i, k, t, cfg, channel))
        .collect::<Result<Vec<f64>>>()?;
    assemble_table(n, trials, cfg.master_seed, &accuracies)
}
