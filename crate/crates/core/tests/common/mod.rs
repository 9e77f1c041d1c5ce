//! Deterministic generators shared by the integration suites.

use inflogic_core::formula::{Atom, Formula, IndexExpr, IndexFamily, RelName, Signature, Term};
use inflogic_core::model::{Assignment, FiniteStructure, RelKey};

/// SplitMix64: deterministic, seedable, dependency-free.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next_u64() % n.max(1)
    }

    pub fn chance(&mut self, percent: u64) -> bool {
        self.below(100) < percent
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.below(items.len() as u64) as usize]
    }
}

/// The generators' signature: unary `Q`, binary `R`, a one-index unary
/// family `P`.
pub fn gen_sig() -> Signature {
    Signature::build(
        [("Q".to_string(), 1), ("R".to_string(), 2)],
        [("P".to_string(), 1, 1)],
        [],
    )
    .unwrap()
}

pub const FREE_VARS: [&str; 2] = ["u", "v"];

/// Knobs for the formula generator.
#[derive(Clone, Copy)]
pub struct GenConfig {
    pub max_depth: u32,
    /// Allow naturals-indexed literal families in addition to finite ones.
    pub nat_families: bool,
    /// Largest finite-family size.
    pub max_family: usize,
    /// Restrict to shapes of existential rank at most one.
    pub existential_only: bool,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_depth: 4, nat_families: false, max_family: 3, existential_only: false }
    }
}

struct GenState {
    counter: u64,
}

/// A random well-formed formula whose free variables lie in `FREE_VARS`.
pub fn gen_formula(rng: &mut Rng, cfg: GenConfig) -> Formula {
    let mut state = GenState { counter: 0 };
    let scope: Vec<String> = FREE_VARS.iter().map(|s| s.to_string()).collect();
    gen_node(rng, cfg, &mut state, &scope, cfg.max_depth)
}

fn gen_atom(rng: &mut Rng, scope: &[String]) -> Formula {
    let var = |rng: &mut Rng| Term::Var(rng.pick(scope).clone());
    match rng.below(3) {
        0 => Formula::Atomic(Atom { rel: RelName::Plain("Q".into()), args: vec![var(rng)] }),
        1 => Formula::Atomic(Atom {
            rel: RelName::Plain("R".into()),
            args: vec![var(rng), var(rng)],
        }),
        _ => Formula::Atomic(Atom {
            rel: RelName::Indexed {
                base: "P".into(),
                indices: vec![IndexExpr::Lit(rng.below(3))],
            },
            args: vec![var(rng)],
        }),
    }
}

fn gen_node(
    rng: &mut Rng,
    cfg: GenConfig,
    state: &mut GenState,
    scope: &[String],
    depth: u32,
) -> Formula {
    if depth == 0 {
        let atom = gen_atom(rng, scope);
        return if rng.chance(30) { Formula::not(atom) } else { atom };
    }
    let roll = rng.below(100);
    if roll < 25 {
        let atom = gen_atom(rng, scope);
        if rng.chance(30) {
            Formula::not(atom)
        } else {
            atom
        }
    } else if roll < 38 && !cfg.existential_only {
        Formula::not(gen_node(rng, cfg, state, scope, depth - 1))
    } else if roll < 56 {
        let k = 2 + rng.below(cfg.max_family as u64 - 1) as usize;
        let members: Vec<Formula> =
            (0..k).map(|_| gen_node(rng, cfg, state, scope, depth - 1)).collect();
        if rng.chance(50) {
            Formula::And(members)
        } else {
            Formula::Or(members)
        }
    } else if roll < 70 {
        // Infinite connective: a finite-list family, or a literal
        // naturals-indexed template when enabled.
        if cfg.nat_families && rng.chance(40) {
            state.counter += 1;
            let ix = format!("n{}", state.counter);
            let atom = Formula::Atomic(Atom {
                rel: RelName::Indexed {
                    base: "P".into(),
                    indices: vec![IndexExpr::Var(ix.clone())],
                },
                args: vec![Term::Var(rng.pick(scope).clone())],
            });
            let template = if rng.chance(50) { Formula::not(atom) } else { atom };
            let fam = IndexFamily::NatIndexed { var: ix, template: Box::new(template) };
            if rng.chance(50) {
                Formula::InfAnd(fam)
            } else {
                Formula::InfOr(fam)
            }
        } else {
            let k = 2 + rng.below(cfg.max_family as u64 - 1) as usize;
            let members: Vec<Formula> =
                (0..k).map(|_| gen_node(rng, cfg, state, scope, depth - 1)).collect();
            let fam = IndexFamily::FiniteList(members);
            if rng.chance(50) {
                Formula::InfAnd(fam)
            } else {
                Formula::InfOr(fam)
            }
        }
    } else {
        state.counter += 1;
        let fresh = format!("b{}", state.counter);
        let mut inner_scope = scope.to_vec();
        inner_scope.push(fresh.clone());
        let body = gen_node(rng, cfg, state, &inner_scope, depth - 1);
        if cfg.existential_only || rng.chance(50) {
            Formula::Exists(vec![fresh], Box::new(body))
        } else {
            Formula::Forall(vec![fresh], Box::new(body))
        }
    }
}

/// A random structure over `gen_sig` with 1..=max_elems elements.
pub fn gen_structure(rng: &mut Rng, max_elems: usize) -> FiniteStructure {
    let n = 1 + rng.below(max_elems as u64) as usize;
    let names: Vec<String> = (0..n).map(|i| format!("e{i}")).collect();
    let mut st = FiniteStructure::new(names.clone()).unwrap();
    for name in &names {
        if rng.chance(50) {
            st.add_fact(RelKey::plain("Q"), vec![name.clone()]).unwrap();
        }
        for k in 0..3u64 {
            if rng.chance(25) {
                st.add_fact(RelKey::indexed("P", &[k]), vec![name.clone()]).unwrap();
            }
        }
    }
    for a in &names {
        for b in &names {
            if rng.chance(30) {
                st.add_fact(RelKey::plain("R"), vec![a.clone(), b.clone()]).unwrap();
            }
        }
    }
    st
}

/// An assignment sending every free variable to a random element.
pub fn gen_assignment(rng: &mut Rng, st: &FiniteStructure) -> Assignment {
    let mut asg = Assignment::new();
    for v in FREE_VARS {
        let e = rng.pick(st.universe()).clone();
        asg = asg.bind(v, &e);
    }
    asg
}

/// A random induced substructure on a nonempty subset of the universe.
pub fn gen_substructure(rng: &mut Rng, st: &FiniteStructure) -> FiniteStructure {
    let n = st.universe().len();
    let keep_mask = 1 + rng.below((1u64 << n) - 1);
    let keep: Vec<String> = st
        .universe()
        .iter()
        .enumerate()
        .filter(|(i, _)| keep_mask >> i & 1 == 1)
        .map(|(_, e)| e.clone())
        .collect();
    st.restrict_to(&keep).unwrap()
}
