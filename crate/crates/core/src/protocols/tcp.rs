//! Minimal three-way handshake bookkeeping for the connection-oriented
//! transport. Control frames only; no data-path TCP behaviour.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HandshakeStep {
    SynSent,
    AckSent,
    Established,
    TimedOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TimeoutAction {
    Retransmit,
    GiveUp,
    Ignore,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TcpHandshake {
    pub step: HandshakeStep,
    pub attempts: u32,
    max_retries: u32,
}

impl TcpHandshake {
    /// State right after the first SYN went out.
    pub fn start(max_retries: u32) -> Self {
        TcpHandshake {
            step: HandshakeStep::SynSent,
            attempts: 1,
            max_retries,
        }
    }

    /// SYN-ACK received; the caller sends the final ACK.
    pub fn on_syn_ack(&mut self) -> bool {
        if self.step == HandshakeStep::SynSent {
            self.step = HandshakeStep::AckSent;
            true
        } else {
            false
        }
    }

    /// The ACK reached the provider.
    pub fn on_ack_delivered(&mut self) -> bool {
        if self.step == HandshakeStep::AckSent {
            self.step = HandshakeStep::Established;
            true
        } else {
            false
        }
    }

    pub fn on_timeout(&mut self) -> TimeoutAction {
        if self.step != HandshakeStep::SynSent {
            return TimeoutAction::Ignore;
        }
        if self.attempts > self.max_retries {
            self.step = HandshakeStep::TimedOut;
            TimeoutAction::GiveUp
        } else {
            self.attempts += 1;
            TimeoutAction::Retransmit
        }
    }
}
