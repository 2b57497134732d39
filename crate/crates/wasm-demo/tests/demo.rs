use rise_wasm_demo::{decision_regions_json, risk_curves_json, threshold_rule_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn decision_regions_separate_the_two_rules() {
    let v = parse(decision_regions_json("discrete", 0.25, 3000, 1).unwrap());
    let x = v["x"].as_array().unwrap();
    assert_eq!(x.len(), 101);
    let rise = v["rules"]["rise"]["decisions"].as_array().unwrap();
    let exp = v["rules"]["exp"]["decisions"].as_array().unwrap();
    // robust rule: -1 on the left region, +1 on the right; the mean rule the reverse
    assert_eq!(rise[10], -1.0);
    assert_eq!(rise[90], 1.0);
    assert_eq!(exp[10], 1.0);
    assert_eq!(exp[90], -1.0);
    let m = &v["rules"]["rise"]["metrics"];
    assert!((m["objective_all"].as_f64().unwrap() - 12.0).abs() < 0.5, "{m}");
}

#[test]
fn risk_curves_order_with_tau() {
    let lo = parse(risk_curves_json(0.1, 2000, 3).unwrap());
    let hi = parse(risk_curves_json(0.9, 2000, 3).unwrap());
    for arm in ["+1", "-1"] {
        let a = lo["arms"][arm]["curve"].as_array().unwrap();
        let b = hi["arms"][arm]["curve"].as_array().unwrap();
        let mean = |c: &Vec<Value>| c.iter().map(|v| v.as_f64().unwrap()).sum::<f64>() / c.len() as f64;
        assert!(mean(a) < mean(b), "{arm}");
        assert!(!lo["arms"][arm]["points"].as_array().unwrap().is_empty());
    }
}

#[test]
fn threshold_rule_reproduces_toy_cells() {
    // "-1 below .5" is the robust rule, "+1 below .5" the mean-optimal one
    let robust = parse(threshold_rule_json("discrete", 0.25, 0.5, -1, 0).unwrap());
    let mean = parse(threshold_rule_json("discrete", 0.25, 0.5, 1, 0).unwrap());
    let obj = |v: &Value| v["metrics"]["objective_all"].as_f64().unwrap();
    assert!((obj(&robust) - 12.0).abs() < 0.3);
    assert!((obj(&mean) - 2.5).abs() < 0.3);
}

#[test]
fn bad_arguments_are_errors() {
    assert!(decision_regions_json("categorical", 0.25, 1000, 0).is_err());
    assert!(risk_curves_json(1.5, 1000, 0).is_err());
    assert!(risk_curves_json(0.5, 10, 0).is_err());
    assert!(threshold_rule_json("discrete", 0.25, 0.5, 0, 0).is_err());
    assert!(threshold_rule_json("discrete", 0.25, f64::NAN, 1, 0).is_err());
}
