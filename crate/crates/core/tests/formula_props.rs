use std::sync::Arc;

use boolmin::formula::{parse, Assignment, Connective, Formula};
use proptest::prelude::*;

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        4 => prop::sample::select(vec!["p", "q", "r", "s"]).prop_map(Formula::var),
        1 => Just(Formula::False),
    ];
    leaf.prop_recursive(6, 40, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            (prop::sample::select(Connective::ALL.to_vec()), inner.clone(), inner)
                .prop_map(|(c, a, b)| Formula::bin(c, a, b)),
        ]
    })
}

fn eval_naive(f: &Formula, a: &Assignment) -> bool {
    match f {
        Formula::Var(v) => a.get(v).unwrap(),
        Formula::False => false,
        Formula::Not(x) => !eval_naive(x, a),
        Formula::Bin(c, x, y) => {
            let (x, y) = (eval_naive(x, a), eval_naive(y, a));
            match c {
                Connective::And => x && y,
                Connective::Or => x || y,
                Connective::Implies => !x || y,
            }
        }
    }
}

proptest! {
    #[test]
    fn print_parse_round_trip(f in arb_formula()) {
        let text = f.to_string();
        prop_assert_eq!(parse(&text).unwrap(), f);
    }

    #[test]
    fn size_depth_bounds(f in arb_formula()) {
        let (s, d) = (f.size(), f.depth());
        prop_assert!(d < s);
        prop_assert!(s < 1usize << (d + 1));
    }

    #[test]
    fn truth_table_matches_pointwise_evaluation(f in arb_formula()) {
        let vars: Vec<Arc<str>> = ["p", "q", "r", "s"].iter().map(|v| Arc::from(*v)).collect();
        let tt = f.truth_table(&vars).unwrap();
        for i in 0..16usize {
            let a = Assignment::from_index(&vars, i);
            prop_assert_eq!(tt.bit(i), eval_naive(&f, &a));
            prop_assert_eq!(f.evaluate(&a).unwrap(), eval_naive(&f, &a));
        }
    }
}

#[test]
fn extra_parentheses_and_whitespace_are_accepted() {
    let a = parse("((p)) &\t(q|  r)").unwrap();
    assert_eq!(a, parse("p & (q | r)").unwrap());
    assert_eq!(parse("p -> q -> r").unwrap(), parse("p -> (q -> r)").unwrap());
    assert_eq!(parse("p & q & r").unwrap(), parse("(p & q) & r").unwrap());
}
