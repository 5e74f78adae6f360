use super::{BenchError, CallReceipt, ContractHandle};
use crate::machine::{emit_contract_source, Call, MachineState, ProcessMachine};

/// Executes reference contracts directly on their [`ProcessMachine`]. Only
/// sources byte-identical to the machine's emitted contract can be
/// "deployed"; anything else needs a real compiler and node.
pub struct InProcessBackend;

impl InProcessBackend {
    pub fn deploy(&self, source: &str, machine: &ProcessMachine) -> Result<MachineHandle, BenchError> {
        let reference = emit_contract_source(machine).map_err(|e| BenchError::Compile(e.to_string()))?;
        if source != reference {
            return Err(BenchError::BackendUnavailable(
                "the in-process backend only runs reference contracts".into(),
            ));
        }
        Ok(MachineHandle::new(machine.clone()))
    }
}

pub struct MachineHandle {
    machine: ProcessMachine,
    state: MachineState,
}

impl MachineHandle {
    pub fn new(machine: ProcessMachine) -> Self {
        let state = machine.initial();
        Self { machine, state }
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }
}

impl ContractHandle for MachineHandle {
    fn call(&mut self, call: &Call) -> Result<CallReceipt, BenchError> {
        let r = self.machine.call(&self.state, call);
        if r.accepted {
            self.state = r.state;
        }
        Ok(CallReceipt { accepted: r.accepted, gas: r.fired.len() as u64 })
    }

    fn is_ended(&mut self) -> Result<bool, BenchError> {
        Ok(self.machine.is_ended(&self.state))
    }

    fn reset(&mut self) -> Result<(), BenchError> {
        self.state = self.machine.initial();
        Ok(())
    }
}
