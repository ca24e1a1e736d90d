use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop edge for user {user:?}")]
    SelfLoop { line: usize, user: String },

    #[error("self-loop friendship for user {0}")]
    SelfFriendship(u32),

    #[error("empty population: {0}")]
    EmptyPopulation(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("need at least {needed} points for the fit, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("delay {delta} outside the time frame tau={tau}")]
    WindowViolation { delta: i64, tau: i64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("training diverged at feature {feature}, epoch {epoch}")]
    Diverged { feature: usize, epoch: usize },

    #[error("degree sequence could not be realised after {attempts} rewiring attempts")]
    InfeasibleDegrees { attempts: usize },

    #[error("test range [{start}, {end}) outside the corpus span [{first}, {last}]")]
    TestRange {
        start: i64,
        end: i64,
        first: i64,
        last: i64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
