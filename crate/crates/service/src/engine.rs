use std::time::Instant;

use gestigo_core::{SkeletonSequence, VoName};
use gestigo_net::{predict_images, render_for_model, Model};

use crate::error::{Result, ServiceError};
use crate::protocol::{Latency, PredictionMessage, ServerMessage, PROTOCOL_VERSION};
use crate::session::Gesture;

/// A loaded model shared read-only by every session.
pub struct Engine {
    model: Model,
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

impl Engine {
    /// `vos` must be the order the model was trained with.
    pub fn new(model: Model, vos: &[VoName]) -> Result<Self> {
        if vos != model.config().vos.as_slice() {
            let names = |v: &[VoName]| v.iter().map(|x| x.as_str()).collect::<Vec<_>>().join(",");
            return Err(ServiceError::Argument(format!(
                "views {} do not match the model's {}",
                names(vos),
                names(&model.config().vos)
            )));
        }
        Ok(Engine { model })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn ready_message(&self) -> ServerMessage {
        let cfg = self.model.config();
        ServerMessage::Ready {
            version: PROTOCOL_VERSION,
            vos: cfg.vos.iter().map(|v| v.as_str().to_string()).collect(),
            classes: cfg.class_names.clone(),
        }
    }

    /// Condenses and classifies one gesture. `received` is when the stop
    /// arrived; the total latency counts from there.
    pub fn classify(&self, gesture: &Gesture, received: Instant) -> Result<PredictionMessage> {
        let seq = SkeletonSequence::new(
            gesture.frames.clone(),
            gesture.schema.clone(),
            None,
            None,
            format!("session {} gesture {}", gesture.session_id, gesture.gesture_id),
        )?;
        let t = Instant::now();
        let images = render_for_model(&self.model, &seq)?;
        let condense = ms(t);
        let t = Instant::now();
        let p = predict_images(&self.model, &images, None)?;
        let infer = ms(t);
        let class = p.class();
        let cfg = self.model.config();
        Ok(PredictionMessage {
            gesture_id: gesture.gesture_id,
            vos: cfg.vos.iter().map(|v| v.as_str().to_string()).collect(),
            streams: p.stream_probs,
            tuner: p.tuner_probs,
            class,
            label: cfg.class_names[class].clone(),
            latency_ms: Latency {
                condense,
                infer,
                total: ms(received).max(condense + infer),
            },
            frames: gesture.frames.len(),
            duration_ms: gesture.duration_ms(),
        })
    }
}
