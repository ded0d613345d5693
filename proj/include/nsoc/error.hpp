/*
Copyright 2026 The nsoc-sched Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nsoc {

enum class Errc {
    InvalidInput,
    UnmappedActor,
    UnsupportedAssignment,
    MissingOrder,
    Infeasible,
    AcyclicGraph,
    ZeroDelayCycle,
    NonPositivePeriod,
    Deadlock,
    CyclicTpo,
    OrderMismatch,
    NoSubunitForOp,
    NegativeTime,
    NoFeasibleSchedule,
    ProbabilityOverflow,
    SaturatedResource,
    NoAdmissibleSchedule,
};

inline std::string_view errc_name(Errc code) {
    switch (code) {
    case Errc::InvalidInput: return "InvalidInput";
    case Errc::UnmappedActor: return "UnmappedActor";
    case Errc::UnsupportedAssignment: return "UnsupportedAssignment";
    case Errc::MissingOrder: return "MissingOrder";
    case Errc::Infeasible: return "Infeasible";
    case Errc::AcyclicGraph: return "AcyclicGraph";
    case Errc::ZeroDelayCycle: return "ZeroDelayCycle";
    case Errc::NonPositivePeriod: return "NonPositivePeriod";
    case Errc::Deadlock: return "Deadlock";
    case Errc::CyclicTpo: return "CyclicTpo";
    case Errc::OrderMismatch: return "OrderMismatch";
    case Errc::NoSubunitForOp: return "NoSubunitForOp";
    case Errc::NegativeTime: return "NegativeTime";
    case Errc::NoFeasibleSchedule: return "NoFeasibleSchedule";
    case Errc::ProbabilityOverflow: return "ProbabilityOverflow";
    case Errc::SaturatedResource: return "SaturatedResource";
    case Errc::NoAdmissibleSchedule: return "NoAdmissibleSchedule";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace nsoc
