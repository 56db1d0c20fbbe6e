use clap::ValueEnum;
use qgt::kernels::DiscreteMeasure;
use qgt::lattice::ExtConfig;
use qgt::scalar::Rational;
use serde_json::{Map, Value};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub const CSV_HEADER: &str = "config,weight,tail_bound\n";

/// Scientific notation with `digits` significant digits.
pub fn float(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{:.*e}", digits.saturating_sub(1), x)
}

/// Atom table with weights already rendered.
#[derive(Default)]
pub struct Table {
    pub rows: BTreeMap<ExtConfig, String>,
    pub tail: String,
}

impl Table {
    pub fn exact(m: &DiscreteMeasure<Rational>) -> Self {
        Table {
            rows: m.atoms.iter().map(|(y, w)| (y.clone(), w.to_string())).collect(),
            tail: m.tail_bound.to_string(),
        }
    }

    pub fn float(m: &DiscreteMeasure<f64>, digits: usize) -> Self {
        Table {
            rows: m.atoms.iter().map(|(y, w)| (y.clone(), float(*w, digits))).collect(),
            tail: float(m.tail_bound, digits),
        }
    }

    pub fn json(&self) -> Value {
        let mut out = Map::new();
        for (y, w) in &self.rows {
            out.insert(format!("({y})"), Value::String(w.clone()));
        }
        out.insert("tail".into(), Value::String(self.tail.clone()));
        Value::Object(out)
    }

    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for (y, w) in &self.rows {
            s.push_str(&format!("\"({y})\",{w},{}\n", self.tail));
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => format!("{}\n", self.json()),
            Format::Csv => format!("{CSV_HEADER}{}", self.csv_rows()),
        }
    }
}

/// Flat key/value output; CSV gets a header row of the keys.
pub fn record(fields: &[(&str, String)], format: Format) -> String {
    match format {
        Format::Json => {
            let map: Map<String, Value> =
                fields.iter().map(|(k, v)| (k.to_string(), Value::String(v.clone()))).collect();
            format!("{}\n", Value::Object(map))
        }
        Format::Csv => {
            let keys: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let vals: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", keys.join(","), vals.join(","))
        }
    }
}
