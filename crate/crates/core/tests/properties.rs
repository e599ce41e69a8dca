use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kred_core::kappa::{
    canonicalize_species, normalize, parse_expression, parse_signature, structurally_equal, SiteGraph,
};
use kred_core::{expand, parse_model, reduce_all, ReductionConfig, Signature};

const SIG: &str = "%agent: A(x,y,s~u~p)\n%agent: B(z)";

fn sig() -> Signature {
    parse_signature(SIG).unwrap()
}

/// A connected mixture: agent names, the state of `A.s`, and bonds
/// `((agent, site), (agent, site))` with sites numbered per agent.
#[derive(Debug, Clone)]
struct Mixture {
    names: Vec<&'static str>,
    states: Vec<&'static str>,
    bonds: Vec<((usize, usize), (usize, usize))>,
}

const A_SITES: [&str; 2] = ["x", "y"];

fn site_name(agent: &str, i: usize) -> &'static str {
    if agent == "A" {
        A_SITES[i]
    } else {
        "z"
    }
}

fn random_mixture(rng: &mut ChaCha8Rng) -> Mixture {
    loop {
        let n = rng.random_range(1..=5);
        let names: Vec<&'static str> = (0..n).map(|_| if rng.random_bool(0.6) { "A" } else { "B" }).collect();
        let states = (0..n).map(|_| if rng.random_bool(0.5) { "u" } else { "p" }).collect();
        let mut free: Vec<Vec<usize>> = names.iter().map(|&a| if a == "A" { vec![0, 1] } else { vec![0] }).collect();
        let mut bonds = Vec::new();
        let mut ok = true;
        // A random spanning tree, then possibly one extra bond.
        for v in 1..n {
            let candidates: Vec<usize> = (0..v).filter(|&u| !free[u].is_empty()).collect();
            if candidates.is_empty() || free[v].is_empty() {
                ok = false;
                break;
            }
            let u = candidates[rng.random_range(0..candidates.len())];
            let iu = rng.random_range(0..free[u].len());
            let su = free[u].remove(iu);
            let iv = rng.random_range(0..free[v].len());
            let sv = free[v].remove(iv);
            bonds.push(((u, su), (v, sv)));
        }
        if !ok {
            continue;
        }
        let open: Vec<(usize, usize)> = (0..n).flat_map(|a| free[a].iter().map(move |&s| (a, s))).collect();
        if open.len() >= 2 && rng.random_bool(0.3) {
            let (p, q) = (open[0], open[open.len() - 1]);
            if p != q {
                bonds.push((p, q));
            }
        }
        return Mixture { names, states, bonds };
    }
}

/// Kappa text for the mixture with agents listed in `order`.
fn render(m: &Mixture, order: &[usize]) -> String {
    let mut link: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (i, &(p, q)) in m.bonds.iter().enumerate() {
        link.insert(p, i + 1);
        link.insert(q, i + 1);
    }
    order
        .iter()
        .map(|&a| {
            let name = m.names[a];
            let count = if name == "A" { 2 } else { 1 };
            let mut sites: Vec<String> = (0..count)
                .map(|s| match link.get(&(a, s)) {
                    Some(l) => format!("{}!{l}", site_name(name, s)),
                    None => site_name(name, s).to_string(),
                })
                .collect();
            if name == "A" {
                sites.push(format!("s~{}", m.states[a]));
            }
            format!("{name}({})", sites.join(","))
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn key(text: &str) -> String {
    let s = sig();
    let g = SiteGraph::from_expression(&parse_expression(text, &s).unwrap()).unwrap();
    canonicalize_species(&g, &s).unwrap().key().to_string()
}

/// Isomorphism by trying every bijection of agents.
fn brute_isomorphic(a: &Mixture, b: &Mixture) -> bool {
    let n = a.names.len();
    if n != b.names.len() || a.bonds.len() != b.bonds.len() {
        return false;
    }
    let norm = |bonds: &[((usize, usize), (usize, usize))], map: &dyn Fn(usize) -> usize| {
        bonds
            .iter()
            .map(|&((u, su), (v, sv))| {
                let (p, q) = ((map(u), su), (map(v), sv));
                if p <= q {
                    (p, q)
                } else {
                    (q, p)
                }
            })
            .collect::<BTreeSet<_>>()
    };
    let target = norm(&b.bonds, &|v| v);
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let labels_match = (0..n).all(|i| {
            a.names[i] == b.names[perm[i]] && (a.names[i] != "A" || a.states[i] == b.states[perm[i]])
        });
        if labels_match && norm(&a.bonds, &|v| perm[v]) == target {
            return true;
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else { return false };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mixture(&mut rng);
        let e = parse_expression(&render(&m, &(0..m.names.len()).collect::<Vec<_>>()), &sig()).unwrap();
        let once = normalize(&e);
        prop_assert_eq!(normalize(&once).to_string(), once.to_string());
    }

    #[test]
    fn key_ignores_agent_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mixture(&mut rng);
        let mut order: Vec<usize> = (0..m.names.len()).collect();
        let base = key(&render(&m, &order));
        order.shuffle(&mut rng);
        prop_assert_eq!(key(&render(&m, &order)), base);
    }

    #[test]
    fn key_equality_is_isomorphism(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (a, b) = (random_mixture(&mut rng), random_mixture(&mut rng));
        let ka = key(&render(&a, &(0..a.names.len()).collect::<Vec<_>>()));
        let kb = key(&render(&b, &(0..b.names.len()).collect::<Vec<_>>()));
        prop_assert_eq!(ka == kb, brute_isomorphic(&a, &b));
    }

    #[test]
    fn structural_equality_is_an_equivalence(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_mixture(&mut rng);
        let s = sig();
        let mut order: Vec<usize> = (0..m.names.len()).collect();
        let e1 = parse_expression(&render(&m, &order), &s).unwrap();
        order.shuffle(&mut rng);
        let e2 = parse_expression(&render(&m, &order), &s).unwrap();
        order.shuffle(&mut rng);
        let e3 = parse_expression(&render(&m, &order), &s).unwrap();
        let other = random_mixture(&mut rng);
        let e4 = parse_expression(&render(&other, &(0..other.names.len()).collect::<Vec<_>>()), &s).unwrap();
        prop_assert!(structurally_equal(&e1, &e1));
        prop_assert_eq!(structurally_equal(&e1, &e4), structurally_equal(&e4, &e1));
        prop_assert!(structurally_equal(&e1, &e2) && structurally_equal(&e2, &e3) && structurally_equal(&e1, &e3));
    }
}

const EXACT_MODEL: &str = "\
%agent: A()
%agent: B()
%agent: C()
%agent: M()
%init: 4 A()
%init: 3 M()
%obs: 'A' A()
%obs: 'B' B()
%obs: 'C' C()
r1: A(),M() -> B(),M() @ 0.5
r2: B() -> C() @ 1.5
r3: A(),M() -> B(),M() @ 0.25
r4: C(),A() -> A(),A() @ 0.1
r5: A(),C() -> A(),A() @ 0.3
r6: B(),M(),M() -> A(),M(),M() @ 0.2
";

/// Summed propensity per stoichiometric change, keyed by species text so
/// that different networks compare. Every species gets a count derived
/// from its key.
fn reaction_set(sys: &kred_core::KappaSystem) -> BTreeMap<String, f64> {
    let net = expand(sys, 100, 100).unwrap();
    let x: Vec<f64> = net.species.iter().map(|s| 2.0 + (s.key().len() % 5) as f64).collect();
    let mut out = BTreeMap::new();
    for r in &net.reactions {
        let change = r
            .stoich()
            .iter()
            .map(|&(i, d)| format!("{d:+} {}", net.species[i].key()))
            .collect::<Vec<_>>()
            .join(" ");
        *out.entry(change).or_insert(0.0) += kred_core::semantics::propensity(r, &x);
    }
    out
}

#[test]
fn exact_reductions_are_confluent_under_rule_order() {
    let sys = parse_model(EXACT_MODEL).unwrap();
    let (base, report) = reduce_all(&sys, &ReductionConfig::default());
    assert!(!report.steps.is_empty());
    let want = reaction_set(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let mut shuffled = sys.clone();
        shuffled.rules.shuffle(&mut rng);
        let (red, _) = reduce_all(&shuffled, &ReductionConfig::default());
        assert_eq!(red.rules.len(), base.rules.len());
        let got = reaction_set(&red);
        assert_eq!(got.keys().collect::<Vec<_>>(), want.keys().collect::<Vec<_>>());
        for (k, v) in &want {
            assert!((got[k] - v).abs() <= 1e-12 * v.abs().max(1.0), "{k:?}");
        }
    }
}

#[test]
fn reduction_is_idempotent_on_fixtures() {
    for f in ["fig1_operator.ka", "mm.ka", "dimer.ka", "lambda_pre_cii.ka", "lambda_subnetwork_reconstructed.ka"] {
        let path = format!("{}/fixtures/{f}", env!("CARGO_MANIFEST_DIR"));
        let sys = parse_model(&std::fs::read_to_string(path).unwrap()).unwrap();
        let (once, _) = reduce_all(&sys, &ReductionConfig::default());
        let reparsed = parse_model(&kred_core::print_model(&once)).unwrap();
        let (twice, report) = reduce_all(&reparsed, &ReductionConfig::default());
        assert!(report.steps.is_empty(), "{f}: {report}");
        assert_eq!(twice.rules, reparsed.rules, "{f}");
    }
}
