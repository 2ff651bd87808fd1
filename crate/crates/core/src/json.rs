//! JSON form of terms: `{"c": name, "a": [..]}` for compounds, `{"n": i}`,
//! `{"s": str}` and `{"v": name}`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::term::{Term, Var};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("not a JSON term: {0}")]
pub struct JsonError(pub String);

/// Variables are written with their display name, which includes the
/// scope when it is not zero.
pub fn term_to_json(t: &Term) -> Value {
    match t {
        Term::Int(i) => json!({ "n": i }),
        Term::Str(s) => json!({ "s": s }),
        Term::Var(v) => json!({ "v": v.to_string() }),
        Term::Compound(name, args) => {
            json!({ "c": &**name, "a": args.iter().map(term_to_json).collect::<Vec<_>>() })
        }
    }
}

pub fn term_from_json(v: &Value) -> Result<Term, JsonError> {
    let bad = || JsonError(v.to_string());
    let obj: &Map<String, Value> = v.as_object().ok_or_else(bad)?;
    if let Some(n) = obj.get("n") {
        return n.as_i64().map(Term::Int).ok_or_else(bad);
    }
    if let Some(s) = obj.get("s") {
        return s.as_str().map(Term::string).ok_or_else(bad);
    }
    if let Some(name) = obj.get("v") {
        return name
            .as_str()
            .map(|n| Term::Var(Var::new(n)))
            .ok_or_else(bad);
    }
    let name = obj.get("c").and_then(Value::as_str).ok_or_else(bad)?;
    let args = match obj.get("a") {
        None => Vec::new(),
        Some(Value::Array(items)) => items.iter().map(term_from_json).collect::<Result<_, _>>()?,
        Some(_) => return Err(bad()),
    };
    Ok(Term::compound(name, args))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse_term;
    use proptest::prelude::*;

    #[test]
    fn shapes() {
        let t = parse_term("tweet(user(\"b\"), [1, X])").unwrap();
        assert_eq!(
            term_to_json(&t),
            json!({"c": "tweet", "a": [
                {"c": "user", "a": [{"s": "b"}]},
                {"c": ".", "a": [{"n": 1}, {"c": ".", "a": [{"v": "X"}, {"c": "[]", "a": []}]}]}
            ]})
        );
        assert_eq!(term_from_json(&json!({"c": "a"})).unwrap(), Term::atom("a"));
        assert!(term_from_json(&json!({"n": "x"})).is_err());
        assert!(term_from_json(&json!([1])).is_err());
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            any::<i64>().prop_map(Term::Int),
            ".*".prop_map(Term::string),
            "[A-Z][a-z0-9_]{0,3}".prop_map(|v| Term::var(&v)),
            "[a-z]{1,4}|'.*'".prop_map(|n| Term::atom(&n)),
        ];
        leaf.prop_recursive(4, 32, 4, |inner| {
            ("[a-z.]{1,3}", prop::collection::vec(inner, 0..4))
                .prop_map(|(n, args)| Term::compound(&n, args))
        })
    }

    proptest! {
        #[test]
        fn round_trips(t in arb_term()) {
            prop_assert_eq!(term_from_json(&term_to_json(&t)).unwrap(), t);
        }
    }
}
