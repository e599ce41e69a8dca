//! Ensembles, original-versus-reduced comparison and the scaling
//! experiment.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::stats::{mean_std, EnsembleSummary, Histogram, ObservableSummary};
use super::{bhattacharyya, rng_for, SimConfig, SimError, Simulator, REDUCED_STREAM_OFFSET};
use crate::reduce::{detect_enzymatic, reduce_all, ReductionConfig};
use crate::semantics::{expand, KappaSystem, RateLaw, ReactionNetwork, DEFAULT_MAX_REACTIONS, DEFAULT_MAX_SPECIES};

/// Expansion caps used when a comparison expands systems itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_species: usize,
    pub max_reactions: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_species: DEFAULT_MAX_SPECIES, max_reactions: DEFAULT_MAX_REACTIONS }
    }
}

/// Observable values of every run.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub grid: Vec<f64>,
    pub names: Vec<String>,
    pub integral: Vec<bool>,
    /// `values[run][time][observable]`
    pub values: Vec<Vec<Vec<f64>>>,
}

impl Ensemble {
    pub fn column(&self, obs: usize, t: usize) -> Vec<f64> {
        self.values.iter().map(|run| run[t][obs]).collect()
    }

    pub fn summary(&self) -> EnsembleSummary {
        let observables = self
            .names
            .iter()
            .enumerate()
            .map(|(o, name)| {
                let mut s = ObservableSummary { name: name.clone(), mean: vec![], std: vec![], histograms: vec![] };
                for t in 0..self.grid.len() {
                    let col = self.column(o, t);
                    let (m, sd) = mean_std(&col);
                    s.mean.push(m);
                    s.std.push(sd);
                    s.histograms.push(if self.integral[o] {
                        Histogram::integer(&col)
                    } else {
                        Histogram::freedman_diaconis(&col, 0.0)
                    });
                }
                s
            })
            .collect();
        EnsembleSummary { grid: self.grid.clone(), runs: self.values.len() as u64, observables }
    }
}

fn ensemble_on(net: &ReactionNetwork, cfg: &SimConfig, sim: &dyn Simulator, offset: u64) -> Result<Ensemble, SimError> {
    let values = (0..cfg.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng_for(cfg.seed, offset + run);
            let states = sim
                .sample(net, &cfg.grid, &mut rng)
                .map_err(|e| SimError::Run { index: run, source: Box::new(e) })?;
            Ok(states
                .iter()
                .map(|s| {
                    let x: Vec<f64> = s.iter().map(|&v| v as f64).collect();
                    net.observables.iter().map(|o| o.value(&x)).collect()
                })
                .collect())
        })
        .collect::<Result<Vec<Vec<Vec<f64>>>, SimError>>()?;
    Ok(Ensemble {
        grid: cfg.grid.clone(),
        names: net.observables.iter().map(|o| o.name.clone()).collect(),
        integral: net.observables.iter().map(|o| o.is_integral()).collect(),
        values,
    })
}

/// Runs `cfg.runs` independent trajectories in parallel; results are
/// ordered by run index and do not depend on the thread count.
pub fn ensemble(net: &ReactionNetwork, cfg: &SimConfig, sim: &dyn Simulator) -> Result<Ensemble, SimError> {
    ensemble_on(net, cfg, sim, 0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableComparison {
    pub name: String,
    pub mean_orig: Vec<f64>,
    pub std_orig: Vec<f64>,
    pub mean_red: Vec<f64>,
    pub std_red: Vec<f64>,
    pub distance: Vec<f64>,
}

impl ObservableComparison {
    pub fn time_averaged(&self) -> f64 {
        self.distance.iter().sum::<f64>() / self.distance.len() as f64
    }

    /// Average distance over the first and the second half of the grid.
    pub fn early_late(&self) -> (f64, f64) {
        let h = self.distance.len() / 2;
        let avg = |d: &[f64]| d.iter().sum::<f64>() / d.len().max(1) as f64;
        (avg(&self.distance[..h]), avg(&self.distance[h..]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub grid: Vec<f64>,
    pub observables: Vec<ObservableComparison>,
}

/// Ensembles of both networks with disjoint random streams. Observable
/// values are divided by `scale`; with `scale != 1` or real-valued
/// observables the histograms use Freedman-Diaconis bins of the pooled
/// sample, never narrower than `1 / scale`.
pub fn compare_networks(
    orig: &ReactionNetwork,
    red: &ReactionNetwork,
    cfg: &SimConfig,
    sim: &dyn Simulator,
    scale: f64,
) -> Result<Comparison, SimError> {
    for o in &orig.observables {
        if red.observable(&o.name).is_none() {
            return Err(SimError::MissingObservable(o.name.clone()));
        }
    }
    if let Some(o) = red.observables.iter().find(|o| orig.observable(&o.name).is_none()) {
        return Err(SimError::MissingObservable(o.name.clone()));
    }
    let a = ensemble_on(orig, cfg, sim, 0)?;
    let b = ensemble_on(red, cfg, sim, REDUCED_STREAM_OFFSET)?;
    let mut observables = Vec::new();
    for (oa, name) in a.names.iter().enumerate() {
        let ob = b.names.iter().position(|n| n == name).expect("checked above");
        let integral = scale == 1.0 && a.integral[oa] && b.integral[ob];
        let min_width = if scale == 1.0 { 0.0 } else { 1.0 / scale };
        let mut c = ObservableComparison {
            name: name.clone(),
            mean_orig: vec![],
            std_orig: vec![],
            mean_red: vec![],
            std_red: vec![],
            distance: vec![],
        };
        for t in 0..cfg.grid.len() {
            let xa: Vec<f64> = a.column(oa, t).iter().map(|v| v / scale).collect();
            let xb: Vec<f64> = b.column(ob, t).iter().map(|v| v / scale).collect();
            let (ma, sa) = mean_std(&xa);
            let (mb, sb) = mean_std(&xb);
            let (ha, hb) = Histogram::pair(&xa, &xb, integral, min_width);
            c.mean_orig.push(ma);
            c.std_orig.push(sa);
            c.mean_red.push(mb);
            c.std_red.push(sb);
            c.distance.push(bhattacharyya(&ha, &hb)?);
        }
        observables.push(c);
    }
    Ok(Comparison { grid: cfg.grid.clone(), observables })
}

pub fn compare_systems(
    orig: &KappaSystem,
    red: &KappaSystem,
    cfg: &SimConfig,
    sim: &dyn Simulator,
    limits: Limits,
) -> Result<Comparison, SimError> {
    let a = expand(orig, limits.max_species, limits.max_reactions)?;
    let b = expand(red, limits.max_species, limits.max_reactions)?;
    compare_networks(&a, &b, cfg, sim, 1.0)
}

/// Scale factors `N`. For each, the unbinding and catalysis constants of
/// every enzymatic branch and the initial substrate counts are multiplied
/// by `N`, the scaled system is reduced, and observables are compared
/// after division by `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingExperiment {
    pub factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub factor: f64,
    /// Time-averaged distance per observable.
    pub distances: BTreeMap<String, f64>,
    pub comparison: Comparison,
}

pub fn scale_system(sys: &KappaSystem, factor: f64, red_cfg: &ReductionConfig) -> Result<KappaSystem, SimError> {
    let groups = detect_enzymatic(sys, red_cfg);
    if groups.is_empty() {
        return Err(SimError::NoEnzymaticGroup);
    }
    let mut out = sys.clone();
    let mut fast = Vec::new();
    let mut substrates = std::collections::BTreeSet::new();
    for g in &groups {
        for b in &g.branches {
            fast.push(b.unbinding.clone());
            fast.push(b.catalysis.clone());
            substrates.extend(b.substrates.iter().cloned());
        }
    }
    for r in &mut out.rules {
        if let (true, RateLaw::MassAction(k)) = (fast.contains(&r.name), &mut r.rate) {
            *k *= factor;
        }
    }
    for s in substrates {
        if let Some(n) = out.init.get_mut(&s) {
            *n = (*n as f64 * factor).round() as u64;
        }
    }
    Ok(out)
}

pub fn scaling_experiment(
    sys: &KappaSystem,
    exp: &ScalingExperiment,
    cfg: &SimConfig,
    red_cfg: &ReductionConfig,
    sim: &dyn Simulator,
    limits: Limits,
) -> Result<Vec<ScalingRow>, SimError> {
    if exp.factors.is_empty() {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    for &n in &exp.factors {
        let scaled = scale_system(sys, n, red_cfg)?;
        let (reduced, _) = reduce_all(&scaled, red_cfg);
        let a = expand(&scaled, limits.max_species, limits.max_reactions)?;
        let b = expand(&reduced, limits.max_species, limits.max_reactions)?;
        let comparison = compare_networks(&a, &b, cfg, sim, n)?;
        let distances = comparison
            .observables
            .iter()
            .map(|o| (o.name.clone(), o.time_averaged()))
            .collect();
        rows.push(ScalingRow { factor: n, distances, comparison });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::parse_model;
    use crate::simulate::DirectMethod;

    const MM: &str = "%agent: E(s)\n%agent: S(e)\n%agent: P()\n\
        %init: 1 E(s)\n%init: 20 S(e)\n%obs: P P()\n\
        bind: E(s),S(e) -> E(s!1),S(e!1) @ 1\n\
        unbind: E(s!1),S(e!1) -> E(s),S(e) @ 1\n\
        cat: E(s!1),S(e!1) -> E(s),P() @ 1\n";

    #[test]
    fn one_run_has_no_spread() {
        let net = expand(&parse_model(MM).unwrap(), 10, 10).unwrap();
        let cfg = SimConfig::uniform(5.0, 5, 1, 3);
        let s = ensemble(&net, &cfg, &DirectMethod).unwrap().summary();
        assert!(s.observables[0].std.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn histograms_count_every_run() {
        let net = expand(&parse_model(MM).unwrap(), 10, 10).unwrap();
        let cfg = SimConfig::uniform(5.0, 5, 37, 3);
        let s = ensemble(&net, &cfg, &DirectMethod).unwrap().summary();
        assert!(s.observables[0].histograms.iter().all(|h| h.total() == 37));
    }

    #[test]
    fn ensemble_is_reproducible() {
        let net = expand(&parse_model(MM).unwrap(), 10, 10).unwrap();
        let cfg = SimConfig::uniform(5.0, 5, 50, 11);
        assert_eq!(ensemble(&net, &cfg, &DirectMethod).unwrap(), ensemble(&net, &cfg, &DirectMethod).unwrap());
    }

    #[test]
    fn missing_observable_is_an_error() {
        let a = parse_model(MM).unwrap();
        let mut b = a.clone();
        b.observables.clear();
        let cfg = SimConfig::uniform(1.0, 2, 2, 0);
        assert!(matches!(
            compare_systems(&a, &b, &cfg, &DirectMethod, Limits::default()),
            Err(SimError::MissingObservable(_))
        ));
    }

    #[test]
    fn scaling_multiplies_fast_rates_and_substrate() {
        let sys = parse_model(MM).unwrap();
        let s = scale_system(&sys, 10.0, &ReductionConfig::default()).unwrap();
        assert_eq!(s.rule("unbind").unwrap().rate, RateLaw::MassAction(10.0));
        assert_eq!(s.rule("bind").unwrap().rate, RateLaw::MassAction(1.0));
        assert_eq!(s.init.values().copied().max(), Some(200));
    }

    #[test]
    fn empty_factor_list() {
        let sys = parse_model(MM).unwrap();
        let rows = scaling_experiment(
            &sys,
            &ScalingExperiment { factors: vec![] },
            &SimConfig::uniform(1.0, 2, 2, 0),
            &ReductionConfig::default(),
            &DirectMethod,
            Limits::default(),
        )
        .unwrap();
        assert!(rows.is_empty());
    }
}
