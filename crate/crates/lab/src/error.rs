use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error(transparent)]
    Core(#[from] dampwave::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("config file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("config serialization: {0}")]
    TomlSer(#[from] toml::ser::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
