#include "gsess/protocol.hpp"

#include <stdexcept>

namespace gsess {

bool proto_is_closed(const ProtoPtr& p) {
    return std::visit(
        overloaded{[](const ProtoSend& s) { return proto_is_closed(s.cont); },
                   [](const ProtoRecv& r) { return proto_is_closed(r.cont); },
                   [](const ProtoSelect& s) {
                       return proto_is_closed(s.left) && proto_is_closed(s.right);
                   },
                   [](const ProtoOffer& o) {
                       return proto_is_closed(o.left) && proto_is_closed(o.right);
                   },
                   [](const ProtoEnd&) { return true; },
                   [](const ProtoVar&) { return false; },
                   [](const ProtoDual&) { return false; },
                   [](const ProtoGraded&) { return false; }},
        p->node);
}

ProtoPtr dual(const ProtoPtr& p) {
    return std::visit(
        overloaded{[&](const ProtoSend& s) { return proto_recv(s.payload, dual(s.cont)); },
                   [&](const ProtoRecv& r) { return proto_send(r.payload, dual(r.cont)); },
                   [&](const ProtoSelect& s) { return proto_offer(dual(s.left), dual(s.right)); },
                   [&](const ProtoOffer& o) { return proto_select(dual(o.left), dual(o.right)); },
                   [&](const ProtoEnd&) { return proto_end(); },
                   [&](const auto&) -> ProtoPtr {
                       throw std::logic_error("dual: protocol is not closed");
                   }},
        p->node);
}

ProtoPtr graded_transform(unsigned long n, const ProtoPtr& p) {
    auto boxed = [&](const TypePtr& a) { return type_box(a, grade_nat(nat_lit((long)n))); };
    return std::visit(
        overloaded{
            [&](const ProtoSend& s) {
                return proto_send(boxed(s.payload), graded_transform(n, s.cont));
            },
            [&](const ProtoRecv& r) {
                return proto_recv(boxed(r.payload), graded_transform(n, r.cont));
            },
            [&](const ProtoSelect& s) {
                return proto_select(graded_transform(n, s.left), graded_transform(n, s.right));
            },
            [&](const ProtoOffer& o) {
                return proto_offer(graded_transform(n, o.left), graded_transform(n, o.right));
            },
            [&](const ProtoEnd&) { return proto_end(); },
            [&](const auto&) -> ProtoPtr {
                throw std::logic_error("graded_transform: protocol is not closed");
            }},
        p->node);
}

namespace {
bool is_end(const ProtoPtr& p) { return std::holds_alternative<ProtoEnd>(p->node); }
}  // namespace

bool is_single_action(const ProtoPtr& p) {
    return std::visit(
        overloaded{[](const ProtoSend& s) { return is_end(s.cont); },
                   [](const ProtoRecv& r) { return is_end(r.cont); },
                   [](const ProtoSelect& s) { return is_end(s.left) && is_end(s.right); },
                   [](const ProtoOffer& o) { return is_end(o.left) && is_end(o.right); },
                   [](const ProtoEnd&) { return true; },
                   [](const auto&) { return false; }},
        p->node);
}

bool is_receive_prefix(const ProtoPtr& p) {
    return std::holds_alternative<ProtoRecv>(p->node) ||
           std::holds_alternative<ProtoOffer>(p->node);
}

bool sends_only(const ProtoPtr& p) {
    return std::visit(overloaded{[](const ProtoSend& s) { return sends_only(s.cont); },
                                 [](const ProtoSelect& s) {
                                     return sends_only(s.left) && sends_only(s.right);
                                 },
                                 [](const ProtoEnd&) { return true; },
                                 [](const auto&) { return false; }},
                      p->node);
}

}  // namespace gsess
