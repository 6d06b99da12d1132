use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point ({x:.3}, {y:.3}) is {distance:.3} m from the route (tolerance {tolerance} m)")]
    OffRoute {
        x: f64,
        y: f64,
        distance: f64,
        tolerance: f64,
    },

    #[error("cannot resample track {vehicle_id}: {reason}")]
    Resampling { vehicle_id: String, reason: String },

    #[error("vehicle {vehicle_id} does not complete the event window [{start_s}, {end_s}] m")]
    IncompleteTravel {
        vehicle_id: String,
        start_s: f64,
        end_s: f64,
    },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("collision at t = {time:.2} s: {follower} ran into {leader} (gap {gap:.3} m)")]
    Collision {
        time: f64,
        follower: String,
        leader: String,
        gap: f64,
    },

    #[error("{path}: row {row}: {reason}")]
    Schema {
        path: String,
        row: usize,
        reason: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
