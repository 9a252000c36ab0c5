use serde::Serialize;
use serde_json::{json, Value};

/// One CSV row; `k` and `t` are empty when they do not apply.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub model: String,
    pub n: usize,
    pub k: Option<usize>,
    pub t: Option<f64>,
    pub metric: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub replicas: u64,
    pub seed: u64,
}

/// Outcome of one attached invariant check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub check: String,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: Value,
    pub seed: u64,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub notes: Vec<String>,
}

pub const CSV_COLUMNS: &str = "experiment,model,N,k,t,metric,value,stderr,replicas,seed";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn new<P: Serialize>(experiment: &str, params: &P, seed: u64) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            params: serde_json::to_value(params).unwrap_or(Value::Null),
            seed,
            rows: Vec::new(),
            verdicts: Vec::new(),
            notes: Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        model: &str,
        n: usize,
        k: Option<usize>,
        t: Option<f64>,
        metric: &str,
        value: f64,
        stderr: Option<f64>,
        replicas: u64,
    ) {
        self.rows.push(Row {
            experiment: self.experiment.clone(),
            model: model.to_string(),
            n,
            k,
            t,
            metric: metric.to_string(),
            value,
            stderr,
            replicas,
            seed: self.seed,
        });
    }

    pub fn verdict(&mut self, check: &str, pass: bool, witness: Option<String>) {
        self.verdicts.push(Verdict {
            check: check.to_string(),
            pass,
            witness,
        });
    }

    pub fn note(&mut self, text: &str) {
        self.notes.push(text.to_string());
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    pub fn failures(&self) -> Vec<&Verdict> {
        self.verdicts.iter().filter(|v| !v.pass).collect()
    }

    /// Rows with the given metric, in insertion order.
    pub fn metric(&self, name: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.metric == name).collect()
    }

    /// CSV with `#` header lines carrying the version, configuration and seed.
    /// `config` defaults to the experiment parameters.
    pub fn to_csv(&self, config: Option<&Value>) -> String {
        let config = config.unwrap_or(&self.params);
        let mut out = format!(
            "# shufflecut {}\n# experiment: {}\n# config: {}\n# seed: {}\n{CSV_COLUMNS}\n",
            crate::VERSION,
            self.experiment,
            config,
            self.seed
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.experiment,
                r.model,
                r.n,
                opt(r.k),
                opt(r.t),
                r.metric,
                r.value,
                opt(r.stderr),
                r.replicas,
                r.seed
            ));
        }
        out
    }

    /// The verdict block: version, configuration, seed, verdicts and notes.
    pub fn verdict_json(&self, config: Option<&Value>) -> Value {
        json!({
            "experiment": self.experiment,
            "version": crate::VERSION,
            "config": config.unwrap_or(&self.params),
            "seed": self.seed,
            "passed": self.passed(),
            "verdicts": self.verdicts,
            "notes": self.notes,
        })
    }
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Binomial proportion with its standard error.
pub fn proportion(hits: u64, total: u64) -> (f64, f64) {
    let p = hits as f64 / total as f64;
    (p, (p * (1.0 - p) / total as f64).sqrt())
}
