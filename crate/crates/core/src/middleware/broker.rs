//! Negotiation brokers as pure transition tables. The runtime feeds them
//! inputs and carries out the returned actions.

use serde::{Deserialize, Serialize};

use super::{MiddlewareError, NegotiationId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConsumerState {
    Idle,
    WaitResponse,
    WaitDetails,
    Connected,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProviderState {
    Idle,
    Offered,
    CreatingEndpoint,
    Connected,
    Failed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrokerState {
    Consumer(ConsumerState),
    Provider(ProviderState),
}

impl BrokerState {
    pub const ALL: [BrokerState; 10] = [
        BrokerState::Consumer(ConsumerState::Idle),
        BrokerState::Consumer(ConsumerState::WaitResponse),
        BrokerState::Consumer(ConsumerState::WaitDetails),
        BrokerState::Consumer(ConsumerState::Connected),
        BrokerState::Consumer(ConsumerState::Failed),
        BrokerState::Provider(ProviderState::Idle),
        BrokerState::Provider(ProviderState::Offered),
        BrokerState::Provider(ProviderState::CreatingEndpoint),
        BrokerState::Provider(ProviderState::Connected),
        BrokerState::Provider(ProviderState::Failed),
    ];

    pub fn is_terminal(self) -> bool {
        matches!(
            self,
            BrokerState::Consumer(ConsumerState::Connected | ConsumerState::Failed)
                | BrokerState::Provider(ProviderState::Connected | ProviderState::Failed)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrokerInput {
    /// Application subscribes (consumer side).
    Start,
    /// QOS_REQUEST arrived; `acceptable` is the provider's policy verdict.
    Request {
        acceptable: bool,
    },
    /// QOS_RESPONSE arrived.
    Response {
        accept: bool,
    },
    /// ESTABLISH_REQUEST arrived.
    Establish,
    /// Provider finished creating or reusing its endpoint.
    EndpointCreated {
        ok: bool,
    },
    /// CONNECTION_DETAILS arrived; `ok` is false for a failure notice.
    Details {
        ok: bool,
    },
    Timeout,
}

impl BrokerInput {
    pub const ALL: [BrokerInput; 11] = [
        BrokerInput::Start,
        BrokerInput::Request { acceptable: true },
        BrokerInput::Request { acceptable: false },
        BrokerInput::Response { accept: true },
        BrokerInput::Response { accept: false },
        BrokerInput::Establish,
        BrokerInput::EndpointCreated { ok: true },
        BrokerInput::EndpointCreated { ok: false },
        BrokerInput::Details { ok: true },
        BrokerInput::Details { ok: false },
        BrokerInput::Timeout,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BrokerAction {
    SendRequest,
    SendAccept,
    SendReject,
    SendEstablish,
    CreateEndpoint,
    SendDetails,
    SendFailure,
    ConnectConsumer,
    ArmTimeout,
    CancelTimeout,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Move {
        to: BrokerState,
        actions: &'static [BrokerAction],
    },
    /// Input has no effect in this state.
    Ignored,
}

/// The complete transition function. Anything not listed is ignored,
/// which makes terminal states absorbing.
pub fn transition(state: BrokerState, input: BrokerInput) -> Step {
    use BrokerAction::*;
    use BrokerInput as I;
    use BrokerState::{Consumer as C, Provider as P};
    use ConsumerState as Cs;
    use ProviderState as Ps;

    let (to, actions): (BrokerState, &'static [BrokerAction]) = match (state, input) {
        (C(Cs::Idle), I::Start) => (C(Cs::WaitResponse), &[SendRequest, ArmTimeout]),
        (C(Cs::WaitResponse), I::Response { accept: true }) => {
            (C(Cs::WaitDetails), &[SendEstablish])
        }
        (C(Cs::WaitResponse), I::Response { accept: false }) => (C(Cs::Failed), &[CancelTimeout]),
        (C(Cs::WaitDetails), I::Details { ok: true }) => {
            (C(Cs::Connected), &[CancelTimeout, ConnectConsumer])
        }
        (C(Cs::WaitDetails), I::Details { ok: false }) => (C(Cs::Failed), &[CancelTimeout]),
        (C(Cs::WaitResponse | Cs::WaitDetails), I::Timeout) => (C(Cs::Failed), &[]),

        (P(Ps::Idle), I::Request { acceptable: true }) => {
            (P(Ps::Offered), &[SendAccept, ArmTimeout])
        }
        (P(Ps::Idle), I::Request { acceptable: false }) => (P(Ps::Failed), &[SendReject]),
        (P(Ps::Offered), I::Establish) => (P(Ps::CreatingEndpoint), &[CreateEndpoint]),
        (P(Ps::CreatingEndpoint), I::EndpointCreated { ok: true }) => {
            (P(Ps::Connected), &[CancelTimeout, SendDetails])
        }
        (P(Ps::CreatingEndpoint), I::EndpointCreated { ok: false }) => {
            (P(Ps::Failed), &[CancelTimeout, SendFailure])
        }
        (P(Ps::Offered | Ps::CreatingEndpoint), I::Timeout) => (P(Ps::Failed), &[]),
        _ => return Step::Ignored,
    };
    Step::Move { to, actions }
}

/// One side of one negotiation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Broker {
    pub negotiation: NegotiationId,
    state: BrokerState,
}

impl Broker {
    pub fn consumer(negotiation: NegotiationId) -> Self {
        Broker {
            negotiation,
            state: BrokerState::Consumer(ConsumerState::Idle),
        }
    }

    pub fn provider(negotiation: NegotiationId) -> Self {
        Broker {
            negotiation,
            state: BrokerState::Provider(ProviderState::Idle),
        }
    }

    pub fn state(&self) -> BrokerState {
        self.state
    }

    /// Applies `input`. An input the current state does not accept is a
    /// stale or duplicate message and is reported as such.
    pub fn apply(
        &mut self,
        input: BrokerInput,
    ) -> Result<&'static [BrokerAction], MiddlewareError> {
        match transition(self.state, input) {
            Step::Move { to, actions } => {
                self.state = to;
                Ok(actions)
            }
            Step::Ignored => Err(MiddlewareError::StaleNegotiation(self.negotiation)),
        }
    }
}
