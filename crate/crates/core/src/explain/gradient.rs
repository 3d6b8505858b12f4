use super::EdgeModel;
use crate::error::{Error, Result};
use crate::tensor::Tape;

/// Per edge, the summed gradient components of the target with respect to
/// both directed messages, summed over steps.
pub fn explain_saliency(model: &dyn EdgeModel) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let (y, trace) = model.traced(&tape)?;
    let grads = y.backward()?;
    let mut out = vec![0.0; model.num_edges()];
    for step in &trace.steps {
        for msg in &step.messages {
            if let Some(g) = grads.get_ref(msg.var) {
                out[msg.edge] += g.sum();
            }
        }
    }
    finite(out, "saliency")
}

/// Per step, channel weights are the row mean of the target's gradient with
/// respect to the aggregated messages; each edge scores the dot product of
/// those weights with its two directed messages. Steps are summed.
pub fn explain_gradcam(model: &dyn EdgeModel) -> Result<Vec<f64>> {
    let tape = Tape::new();
    let (y, trace) = model.traced(&tape)?;
    let grads = y.backward()?;
    let mut out = vec![0.0; model.num_edges()];
    for step in &trace.steps {
        let Some(g) = grads.get_ref(step.aggregate) else {
            continue;
        };
        if g.rows() == 0 {
            continue;
        }
        let alpha = g.sum_rows().scale(1.0 / g.rows() as f64);
        for msg in &step.messages {
            let m = msg.var.value();
            out[msg.edge] += alpha
                .data()
                .iter()
                .zip(m.data())
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
    }
    finite(out, "gradcam")
}

fn finite(v: Vec<f64>, what: &'static str) -> Result<Vec<f64>> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}
