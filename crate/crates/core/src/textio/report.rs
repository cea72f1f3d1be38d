use serde_json::{json, Map, Value};

use crate::decide::{DecisionReport, Inconclusive, Verdict, Witness};

fn witness_to_json(w: &Witness) -> Value {
    let mut obj = Map::new();
    obj.insert(
        "instance".into(),
        Value::Array(w.instance.iter().map(|f| Value::String(f.to_string())).collect()),
    );
    if let Some(f) = &w.fact {
        obj.insert("fact".into(), Value::String(f.to_string()));
    }
    if let Some(v) = &w.valuation {
        let assignment: Map<String, Value> = v
            .assignment
            .iter()
            .map(|(x, d)| (x.to_string(), json!(d.0)))
            .collect();
        obj.insert("valuation".into(), json!({ "disjunct": v.disjunct, "assignment": assignment }));
    }
    if let Some(n) = &w.node {
        obj.insert("node".into(), Value::String(n.to_string()));
    }
    if let Some(m) = w.violates {
        obj.insert("violates".into(), Value::String(m.to_string()));
    }
    Value::Object(obj)
}

/// The report as a JSON value. Keys come out sorted, so equal reports print identically.
pub fn report_to_json(r: &DecisionReport) -> Value {
    let mut obj = Map::new();
    if let Some(p) = &r.problem {
        obj.insert("problem".into(), Value::String(p.clone()));
    }
    match &r.verdict {
        Verdict::Holds => {
            obj.insert("holds".into(), Value::Bool(true));
        }
        Verdict::Violated => {
            obj.insert("holds".into(), Value::Bool(false));
        }
        Verdict::Inconclusive(reason) => {
            obj.insert("holds".into(), Value::Null);
            let outcome = match reason {
                Inconclusive::BudgetExceeded { .. } => "budget_exceeded",
                Inconclusive::DomainBound { .. } => "inconclusive",
            };
            obj.insert("outcome".into(), Value::String(outcome.into()));
            obj.insert("reason".into(), Value::String(reason.to_string()));
        }
    }
    if let Some(w) = &r.witness {
        obj.insert("witness".into(), witness_to_json(w));
    }
    if let Some(s) = &r.stats {
        let mut stats = Map::new();
        stats.insert("candidates_examined".into(), json!(s.candidates_examined));
        stats.insert("elapsed_ms".into(), json!(s.elapsed_ms));
        if let Some(o) = s.orphans {
            stats.insert("orphans".into(), json!(o));
        }
        obj.insert("stats".into(), Value::Object(stats));
    }
    Value::Object(obj)
}

/// Compact JSON text of a report.
pub fn serialize_report(r: &DecisionReport) -> String {
    report_to_json(r).to_string()
}
