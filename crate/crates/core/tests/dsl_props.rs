use proptest::prelude::*;

use procsem::model::{Activity, Operator, ProcessTree};
use procsem::tree_dsl::{parse_dfg_edges, parse_tree, render_edge_lines, render_tree, EdgeParseMode};

fn label() -> impl Strategy<Value = Activity> {
    "[a-zA-Z0-9 '\\\\éü→()*+X,-]{1,10}".prop_filter_map("blank label", |s| Activity::new(&s).ok())
}

fn plain_label() -> impl Strategy<Value = Activity> {
    "[a-z]{1,3}( [a-z]{1,3})?".prop_map(|s| Activity::new(&s).unwrap())
}

fn tree() -> impl Strategy<Value = ProcessTree> {
    tree_with(label())
}

fn tree_with<L: Strategy<Value = Activity> + 'static>(labels: L) -> impl Strategy<Value = ProcessTree> {
    let leaf = prop_oneof![
        6 => labels.prop_map(ProcessTree::Leaf),
        1 => Just(ProcessTree::Silent),
    ];
    leaf.prop_recursive(5, 40, 4, |inner| {
        (
            prop_oneof![
                Just(Operator::Sequence),
                Just(Operator::Xor),
                Just(Operator::Parallel),
                Just(Operator::Loop)
            ],
            prop::collection::vec(inner, 2..5),
        )
            .prop_map(|(op, kids)| ProcessTree::Node(op, kids))
    })
}

proptest! {
    #[test]
    fn render_then_parse_is_identity(t in tree()) {
        let text = render_tree(&t);
        prop_assert_eq!(parse_tree(&text).unwrap(), t);
    }

    #[test]
    fn parser_never_panics(s in "\\PC{0,60}") {
        let _ = parse_tree(&s);
        let _ = parse_dfg_edges(&s, EdgeParseMode::Lenient);
        let _ = parse_dfg_edges(&s, EdgeParseMode::Strict);
    }

    #[test]
    fn parser_never_panics_on_dsl_alphabet(s in "[-> X+*()',τ↺×∧→a\\\\]{0,40}") {
        let _ = parse_tree(&s);
    }

    #[test]
    fn edge_lines_round_trip(edges in prop::collection::btree_set((label(), label()), 0..8)) {
        let text = render_edge_lines(&edges);
        let parsed = parse_dfg_edges(&text, EdgeParseMode::Strict).unwrap();
        prop_assert!(parsed.skipped.is_empty());
        prop_assert_eq!(parsed.edges, edges);
    }

    #[test]
    fn whitespace_in_tree_text_is_insignificant(t in tree_with(plain_label())) {
        let spaced = render_tree(&t).replace(", ", " ,\n\t ").replace('(', " ( ");
        prop_assert_eq!(parse_tree(&spaced).unwrap(), t);
    }
}
