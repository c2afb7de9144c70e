//! Remote control over newline-delimited JSON, on plain TCP or a WebSocket
//! upgrade of the same port. See `docs/protocol.md` for the message schemas.

pub mod protocol;
mod server;
mod transport;

pub use protocol::{Message, Mode, PROTOCOL_VERSION};
pub use server::{serve, DataDir, Server, ServerHandle, Session, TICK};

use crate::sim::{Action, Angular, Gripper, Longitudinal};

/// Key names understood by [`keys_to_action`].
pub const KEY_NAMES: [&str; 5] = ["Up", "Down", "Left", "Right", "Space"];

/// Maps a held-key set to an action. Up beats Down, Left beats Right; unknown names are ignored.
pub fn keys_to_action<S: AsRef<str>>(held: &[S]) -> Action {
    let has = |k: &str| held.iter().any(|h| h.as_ref() == k);
    let g = if has("Space") { Gripper::Closed } else { Gripper::Open };
    let l = if has("Up") {
        Longitudinal::Forward
    } else if has("Down") {
        Longitudinal::Back
    } else {
        Longitudinal::Stop
    };
    let a = if has("Left") {
        Angular::Left
    } else if has("Right") {
        Angular::Right
    } else {
        Angular::Straight
    };
    Action::from_parts(g, l, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_mapping_examples() {
        let none: [&str; 0] = [];
        assert_eq!(keys_to_action(&none).index(), 0);
        assert_eq!(keys_to_action(&["Up", "Space"]).index(), 12);
        assert_eq!(keys_to_action(&["Up", "Down", "Left", "Right"]).index(), 4);
        assert_eq!(keys_to_action(&["Down", "Right"]).index(), 8);
        assert_eq!(keys_to_action(&["Escape", "Left"]).index(), 1);
    }
}
