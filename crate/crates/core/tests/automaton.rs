mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use ltlplan::ltl::{compile, is_upward_closed, levels, parse, Label, Level};

fn near_atoms(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("near({i},1)")).collect()
}

#[test]
fn nested_visit_task_matches_brute_force_on_long_words() {
    // (F(a & F(b & F c)) & F d) over the alphabet {∅, {a}, {b}, {c}, {d}}.
    let atoms = near_atoms(4);
    let tf = Tf::and(
        Tf::f(Tf::and(Tf::Atom(0), Tf::f(Tf::and(Tf::Atom(1), Tf::f(Tf::Atom(2)))))),
        Tf::f(Tf::Atom(3)),
    );
    let (dfa, map) = compile_tf(&tf, &atoms);
    let table = transition_table(&dfa, &map);
    let alphabet = [0, 1, 2, 4, 8];
    let mut accepted = 0;
    for_all_words_over(&tf, &alphabet, 8, |rev, truth| {
        let q = rev.iter().rev().fold(dfa.initial(), |q, &a| table[q][a as usize]);
        assert_eq!(dfa.is_accepting(q), truth, "word {:?}", rev.iter().rev().collect::<Vec<_>>());
        accepted += usize::from(truth);
    });
    assert!(accepted > 0);
}

#[test]
fn sequence_language_is_a_then_b() {
    let atoms = near_atoms(2);
    let tf = Tf::f(Tf::and(Tf::Atom(0), Tf::f(Tf::Atom(1))));
    let (dfa, map) = compile_tf(&tf, &atoms);
    assert_eq!(dfa.num_states(), 3);
    let table = transition_table(&dfa, &map);
    for_all_words(&tf, 4, 6, |rev, _| {
        let word: Vec<u32> = rev.iter().rev().copied().collect();
        let q = word.iter().fold(dfa.initial(), |q, &a| table[q][a as usize]);
        let a_then_b =
            (0..word.len()).any(|i| word[i] & 1 == 1 && (i..word.len()).any(|j| word[j] & 2 == 2));
        assert_eq!(dfa.is_accepting(q), a_then_b);
    });
}

#[test]
fn reachability_steps() {
    let dfa = compile(&parse("F near(1,1)").unwrap()).unwrap();
    let q0 = dfa.initial();
    let p: Label = [0].into_iter().collect();
    let qf = dfa.step(q0, &p);
    assert!(dfa.is_accepting(qf));
    assert_eq!(dfa.step(q0, &Label::empty()), q0);
    assert_eq!(dfa.step(qf, &Label::empty()), qf);
    assert_eq!(dfa.step(qf, &p), qf);
    assert_eq!(levels(&dfa)[q0], Level::Finite(1));
    assert_eq!(levels(&dfa)[qf], Level::Finite(0));
}

/// Levels by the backward construction, recomputed here from the automaton
/// alone: level 0 is the accepting set, and level i + 1 holds the states
/// outside lower levels with an edge into level i.
fn hand_levels(dfa: &ltlplan::ltl::Dfa) -> Vec<Option<u32>> {
    let n = dfa.num_states();
    let mut lv: Vec<Option<u32>> = (0..n).map(|q| dfa.is_accepting(q).then_some(0)).collect();
    for i in 0.. {
        let next: Vec<usize> = (0..n)
            .filter(|&q| lv[q].is_none() && dfa.edges(q).iter().any(|e| lv[e.target] == Some(i)))
            .collect();
        if next.is_empty() {
            break;
        }
        for q in next {
            lv[q] = Some(i + 1);
        }
    }
    lv
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_formulas_agree_with_recursive_semantics(
        seed in any::<u64>(),
        words in prop::collection::vec(prop::collection::vec(0u32..8, 0..9), 40),
    ) {
        let atoms = atom_texts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tf = gen_task(&mut rng, atoms.len(), 2);
        let (dfa, map) = compile_tf(&tf, &atoms);
        for w in &words {
            let labels: Vec<Label> = w.iter().map(|&l| to_label(l, &map)).collect();
            prop_assert_eq!(dfa.accepts(&labels), tf.holds(w, 0), "{} on {:?}", tf.render(&atoms), w);
        }
    }

    #[test]
    fn random_formulas_are_upward_closed_with_consistent_levels(seed in any::<u64>()) {
        let atoms = atom_texts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tf = gen_task(&mut rng, atoms.len(), 2);
        let (dfa, _) = compile_tf(&tf, &atoms);
        prop_assert!(is_upward_closed(&dfa).closed);
        let hand = hand_levels(&dfa);
        for q in 0..dfa.num_states() {
            let want = hand[q].map_or(Level::Infinite, Level::Finite);
            prop_assert_eq!(dfa.level(q), want);
        }
        // Accepting states absorb, and the empty label never moves.
        for q in 0..dfa.num_states() {
            prop_assert_eq!(dfa.step(q, &Label::empty()), q);
            if dfa.is_accepting(q) {
                prop_assert!(dfa.edges(q).iter().all(|e| e.target == q));
            }
        }
    }

    #[test]
    fn recompiling_is_deterministic(seed in any::<u64>()) {
        let atoms = atom_texts();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = gen_task(&mut rng, atoms.len(), 2).render(&atoms);
        let a = compile(&parse(&text).unwrap()).unwrap();
        let b = compile(&parse(&text).unwrap()).unwrap();
        prop_assert_eq!(a.dump(), b.dump());
    }
}
