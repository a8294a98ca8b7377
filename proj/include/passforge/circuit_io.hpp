#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "passforge/circuit.hpp"

namespace passforge {

/// Parses the supported OpenQASM 2 subset:
///
///   [OPENQASM 2.0;] [include "qelib1.inc";]
///   qreg <name>[n];  [creg <name>[m];]
///   id|x|sx|h|s|t <q>;   rz(<expr>) <q>;
///   cx|cz|swap <q>,<q>;  ccx <q>,<q>,<q>;
///   measure <q> -> <c>;
///
/// where <expr> is an arithmetic expression over numbers and `pi`.
/// `//` comments are ignored. Exactly one qreg and at most one creg.
/// The result is a logical-space circuit.
QuantumCircuit parse_qasm_subset(std::string_view text);

std::string serialize_qasm_subset(const QuantumCircuit& c, std::string_view header_comment = {});

nlohmann::json circuit_to_json(const QuantumCircuit& c);
QuantumCircuit circuit_from_json(const nlohmann::json& j);

/// Loads a circuit from `.qasm` or `.json` by extension.
QuantumCircuit load_circuit_file(const std::string& path);

}  // namespace passforge
