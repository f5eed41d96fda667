use super::{AssetLibrary, GestureUnit, VisualAsset};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("unknown learning point `{0}`")]
    UnknownLearningPoint(String),
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
}

impl AssetLibrary {
    /// Visual assets linked to a learning point, by ascending sequence rank.
    pub fn query_visuals(&self, learning_point_id: &str) -> Result<Vec<&VisualAsset>, QueryError> {
        if self.learning_point(learning_point_id).is_none() {
            return Err(QueryError::UnknownLearningPoint(learning_point_id.to_string()));
        }
        let mut v: Vec<_> = self
            .visuals()
            .filter(|v| v.learning_point_id == learning_point_id)
            .collect();
        v.sort_by(|a, b| a.sequence_rank.cmp(&b.sequence_rank).then_with(|| a.id.cmp(&b.id)));
        Ok(v)
    }

    /// Gestural units recorded for this learning point on this device,
    /// ordered by unit id.
    pub fn query_gestures(
        &self,
        learning_point_id: &str,
        device_id: &str,
    ) -> Result<Vec<&GestureUnit>, QueryError> {
        if self.learning_point(learning_point_id).is_none() {
            return Err(QueryError::UnknownLearningPoint(learning_point_id.to_string()));
        }
        if self.device(device_id).is_none() {
            return Err(QueryError::UnknownDevice(device_id.to_string()));
        }
        // gestures() iterates in id order already.
        Ok(self
            .gestures()
            .filter(|g| {
                g.context.learning_point_id == learning_point_id && g.context.device_id == device_id
            })
            .collect())
    }
}
