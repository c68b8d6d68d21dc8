//! Play-out checked against a brute-force membership oracle: every word over
//! the alphabet up to the longest possible length is tested for acceptance,
//! and the accepted words must be exactly the played-out language.

use std::collections::BTreeSet;

use procsem::model::{Activity, Operator, ProcessTree};
use procsem::semantics::playout;
use procsem::synth::random_tree;
use procsem::tree_dsl::parse_tree;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn accepts(tree: &ProcessTree, w: &[&str]) -> bool {
    match tree {
        ProcessTree::Leaf(a) => w.len() == 1 && w[0] == a.as_str(),
        ProcessTree::Silent => w.is_empty(),
        ProcessTree::Node(op, kids) => match op {
            Operator::Sequence => seq_accepts(kids, w),
            Operator::Xor => kids.iter().any(|k| accepts(k, w)),
            // Labels are unique, so child alphabets are disjoint and a word is
            // an interleaving iff each projection is accepted.
            Operator::Parallel => {
                let alphabets: Vec<BTreeSet<&str>> = kids.iter().map(alphabet).collect();
                w.iter().all(|x| alphabets.iter().any(|a| a.contains(x)))
                    && kids.iter().zip(&alphabets).all(|(k, a)| {
                        let proj: Vec<&str> = w.iter().copied().filter(|x| a.contains(x)).collect();
                        accepts(k, &proj)
                    })
            }
            Operator::Loop => {
                let body = &kids[0];
                accepts(body, w)
                    || (0..=w.len()).any(|i| {
                        (i..=w.len()).any(|j| {
                            accepts(body, &w[..i])
                                && accepts(body, &w[j..])
                                && kids[1..].iter().any(|r| accepts(r, &w[i..j]))
                        })
                    })
            }
        },
    }
}

fn seq_accepts(kids: &[ProcessTree], w: &[&str]) -> bool {
    match kids.split_first() {
        None => w.is_empty(),
        Some((first, rest)) => (0..=w.len()).any(|k| accepts(first, &w[..k]) && seq_accepts(rest, &w[k..])),
    }
}

fn alphabet(tree: &ProcessTree) -> BTreeSet<&str> {
    tree.leaves().into_iter().map(Activity::as_str).collect()
}

fn max_len(tree: &ProcessTree) -> usize {
    match tree {
        ProcessTree::Leaf(_) => 1,
        ProcessTree::Silent => 0,
        ProcessTree::Node(op, kids) => {
            let lens = kids.iter().map(max_len);
            match op {
                Operator::Sequence | Operator::Parallel => lens.sum(),
                Operator::Xor => lens.max().unwrap_or(0),
                Operator::Loop => 2 * max_len(&kids[0]) + kids[1..].iter().map(max_len).max().unwrap_or(0),
            }
        }
    }
}

/// All words over `alpha` of length at most `max`, or `None` if there are too many.
fn all_words<'a>(alpha: &[&'a str], max: usize, budget: usize) -> Option<Vec<Vec<&'a str>>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max {
        let mut next = Vec::new();
        for w in &frontier {
            for a in alpha {
                let mut v: Vec<&str> = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        if out.len() > budget {
            return None;
        }
        frontier = next;
    }
    Some(out)
}

fn check(tree: &ProcessTree) -> bool {
    let alpha: Vec<&str> = alphabet(tree).into_iter().collect();
    let Some(words) = all_words(&alpha, max_len(tree), 400_000) else {
        return false;
    };
    let oracle: BTreeSet<Vec<String>> = words
        .into_iter()
        .filter(|w| accepts(tree, w))
        .map(|w| w.into_iter().map(String::from).collect())
        .collect();
    let lang: BTreeSet<Vec<String>> = playout(tree, 1 << 20)
        .unwrap()
        .sequences()
        .iter()
        .map(|s| s.iter().map(|a| a.as_str().to_string()).collect())
        .collect();
    assert_eq!(lang, oracle, "tree {}", procsem::render_tree(tree));
    true
}

#[test]
fn hand_written_trees_match_oracle() {
    for text in [
        "->('receive order', X(->('accept order', 'deliver package'), 'reject order'))",
        "+('a', 'b')",
        "+('a', ->('b', 'c'))",
        "*('a', 'b')",
        "*('a', 'b', 'c')",
        "*('a', tau)",
        "*(X('a', tau), 'b')",
        "->(X('a', tau), +('b', *('c', 'd')))",
        "X(tau, 'a', ->('b', 'c'))",
        "+(*('a', 'b'), 'c')",
        "*(+('a', 'b'), tau)",
    ] {
        assert!(check(&parse_tree(text).unwrap()), "{text} too large to enumerate");
    }
}

#[test]
fn random_trees_match_oracle() {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut checked = 0;
    for i in 0..400 {
        let n = 2 + i % 4;
        let labels: Vec<Activity> = (0..n).map(|k| Activity::new(&format!("l{k}")).unwrap()).collect();
        let tree = random_tree(&labels, &mut rng);
        if check(&tree) {
            checked += 1;
        }
    }
    assert!(checked >= 300, "only {checked} trees small enough to enumerate");
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn parallel_counts_are_multinomial() {
    let l = playout(&parse_tree("+(->('a','b'), ->('c','d','e'))").unwrap(), 1000).unwrap();
    assert_eq!(l.len(), binomial(5, 2));
    let l = playout(&parse_tree("+('a','b','c','d','e')").unwrap(), 1000).unwrap();
    assert_eq!(l.len(), 120);
    let l = playout(&parse_tree("+(->('a','b'), ->('c','d'), ->('e','f'))").unwrap(), 1000).unwrap();
    assert_eq!(l.len(), binomial(6, 2) * binomial(4, 2));
}

#[test]
fn eight_way_parallel_reaches_table_maximum() {
    // 8! = 40,320 exceeds the default cap; 7! * 2 = 10,080.
    let t = parse_tree("X(+('a','b','c','d','e','f','g'), +('h','i','j','k','l','m','n'))").unwrap();
    assert_eq!(playout(&t, 32_768).unwrap().len(), 10_080);
    let t = parse_tree("+('a','b','c','d','e','f','g','h')").unwrap();
    assert!(playout(&t, 32_768).is_err());
}
