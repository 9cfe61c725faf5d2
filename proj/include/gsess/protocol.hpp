#pragma once

#include "gsess/ast.hpp"

namespace gsess {

// Operations on protocol trees. All of these expect a closed protocol: no
// protocol variables, and no unresolved Dual/Graded wrappers. The typechecker
// keeps symbolic wrappers (Dual x, Graded n p) and normalises them against
// these functions once instantiation has made them closed.

bool proto_is_closed(const ProtoPtr& p);

// The peer's view: Send<->Recv, Select<->Offer, End->End.
ProtoPtr dual(const ProtoPtr& p);

// Wrap every payload in an exact-use grade of `n` (the multicast transform).
ProtoPtr graded_transform(unsigned long n, const ProtoPtr& p);

// Exactly one communication step: End, Send a End, Recv a End,
// Select End End, Offer End End.
bool is_single_action(const ProtoPtr& p);

// Head constructor is a receive or an offer.
bool is_receive_prefix(const ProtoPtr& p);

// Built solely from Send, Select and End.
bool sends_only(const ProtoPtr& p);

}  // namespace gsess
