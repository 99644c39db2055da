// Copyright 2026 The restbus Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "restbus/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <expat.h>
#include <fmt/format.h>

namespace restbus::config {

namespace {

struct XmlNode {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attrs;
  std::vector<XmlNode> children;
  int line = 0;
};

// Builds a small DOM from expat's SAX callbacks, keeping element line numbers.
class DomBuilder {
 public:
  DomBuilder(std::string_view xml, std::string source) : source_(std::move(source)) {
    XML_Parser parser = XML_ParserCreate(nullptr);
    XML_SetUserData(parser, this);
    XML_SetElementHandler(parser, &DomBuilder::on_start, &DomBuilder::on_end);
    XML_SetCharacterDataHandler(parser, &DomBuilder::on_text);
    parser_ = parser;
    auto status = XML_Parse(parser, xml.data(), static_cast<int>(xml.size()), XML_TRUE);
    int line = static_cast<int>(XML_GetCurrentLineNumber(parser));
    std::string message = status == XML_STATUS_ERROR ? XML_ErrorString(XML_GetErrorCode(parser)) : "";
    XML_ParserFree(parser);
    if (status == XML_STATUS_ERROR) {
      throw ConfigError(ConfigErrc::kXmlSyntax, source_, line, message);
    }
    if (text_error_line_ != 0) {
      throw ConfigError(ConfigErrc::kBadValue, source_, text_error_line_, "unexpected text content");
    }
    if (!root_) throw ConfigError(ConfigErrc::kXmlSyntax, source_, line, "no root element");
  }

  XmlNode take_root() { return std::move(*root_); }

 private:
  static void on_start(void* self_ptr, const XML_Char* name, const XML_Char** attrs) {
    auto* self = static_cast<DomBuilder*>(self_ptr);
    XmlNode node;
    node.name = name;
    node.line = static_cast<int>(XML_GetCurrentLineNumber(self->parser_));
    for (int i = 0; attrs[i] != nullptr; i += 2) node.attrs.emplace_back(attrs[i], attrs[i + 1]);
    self->stack_.push_back(std::move(node));
  }

  static void on_end(void* self_ptr, const XML_Char*) {
    auto* self = static_cast<DomBuilder*>(self_ptr);
    XmlNode node = std::move(self->stack_.back());
    self->stack_.pop_back();
    if (self->stack_.empty()) {
      self->root_ = std::move(node);
    } else {
      self->stack_.back().children.push_back(std::move(node));
    }
  }

  static void on_text(void* self_ptr, const XML_Char* s, int len) {
    auto* self = static_cast<DomBuilder*>(self_ptr);
    for (int i = 0; i < len; ++i) {
      if (!std::isspace(static_cast<unsigned char>(s[i])) && self->text_error_line_ == 0) {
        self->text_error_line_ = static_cast<int>(XML_GetCurrentLineNumber(self->parser_));
      }
    }
  }

  std::string source_;
  XML_Parser parser_ = nullptr;
  std::vector<XmlNode> stack_;
  std::optional<XmlNode> root_;
  int text_error_line_ = 0;
};

class ConfigReader {
 public:
  explicit ConfigReader(std::string source) : source_(std::move(source)) {}

  NetworkConfig read(const XmlNode& root) {
    NetworkConfig cfg;
    if (root.name != "network") fail(ConfigErrc::kBadValue, root, "root element must be <network>");
    allow_attrs(root, {"name"});
    cfg.name = attr(root, "name").value_or("");
    allow_children(root, {"sd", "layouts", "services", "hosts", "topology"});
    std::set<std::string> seen;
    for (const auto& child : root.children) {
      if (!seen.insert(child.name).second) {
        fail(ConfigErrc::kDuplicateId, child, fmt::format("element <{}> given twice", child.name));
      }
    }
    if (const XmlNode* sd = child(root, "sd")) cfg.sd = read_sd(*sd);
    if (const XmlNode* n = child(root, "layouts")) read_layouts(*n, cfg);
    if (const XmlNode* n = child(root, "services")) read_services(*n, cfg);
    if (const XmlNode* n = child(root, "hosts")) read_hosts(*n, cfg);
    if (const XmlNode* n = child(root, "topology")) read_topology(*n, cfg);
    check_topology(cfg, root);
    return cfg;
  }

 private:
  [[noreturn]] void fail(ConfigErrc code, const XmlNode& at, const std::string& detail) const {
    throw ConfigError(code, source_, at.line, detail);
  }

  static std::optional<std::string> attr(const XmlNode& n, std::string_view key) {
    for (const auto& [k, v] : n.attrs) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

  std::string required(const XmlNode& n, std::string_view key) const {
    auto v = attr(n, key);
    if (!v) fail(ConfigErrc::kBadValue, n, fmt::format("<{}> is missing attribute '{}'", n.name, key));
    return *v;
  }

  void allow_attrs(const XmlNode& n, std::initializer_list<std::string_view> allowed) const {
    for (const auto& [k, v] : n.attrs) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        fail(ConfigErrc::kBadValue, n, fmt::format("unknown attribute '{}' on <{}>", k, n.name));
      }
    }
  }

  void allow_children(const XmlNode& n, std::initializer_list<std::string_view> allowed) const {
    for (const auto& c : n.children) {
      if (std::find(allowed.begin(), allowed.end(), c.name) == allowed.end()) {
        fail(ConfigErrc::kBadValue, c, fmt::format("unknown element <{}> inside <{}>", c.name, n.name));
      }
    }
  }

  static const XmlNode* child(const XmlNode& n, std::string_view name) {
    for (const auto& c : n.children) {
      if (c.name == name) return &c;
    }
    return nullptr;
  }

  std::uint64_t parse_uint(const XmlNode& n, std::string_view key, std::string_view text,
                           std::uint64_t max) const {
    int base = 10;
    std::string_view digits = text;
    if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
      digits.remove_prefix(2);
      base = 16;
    }
    std::uint64_t value = 0;
    auto [next, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value, base);
    if (digits.empty() || ec != std::errc{} || next != digits.data() + digits.size() || value > max) {
      fail(ConfigErrc::kBadValue, n, fmt::format("{}: '{}' is not an integer in [0, {}]", key, text, max));
    }
    return value;
  }

  template <typename T>
  T uint_attr(const XmlNode& n, std::string_view key) const {
    return static_cast<T>(parse_uint(n, key, required(n, key), std::numeric_limits<T>::max()));
  }

  template <typename T>
  T uint_attr_or(const XmlNode& n, std::string_view key, T fallback) const {
    auto v = attr(n, key);
    return v ? static_cast<T>(parse_uint(n, key, *v, std::numeric_limits<T>::max())) : fallback;
  }

  double double_attr_or(const XmlNode& n, std::string_view key, double fallback) const {
    auto v = attr(n, key);
    if (!v) return fallback;
    double value = 0;
    auto [next, ec] = std::from_chars(v->data(), v->data() + v->size(), value);
    if (v->empty() || ec != std::errc{} || next != v->data() + v->size() || !std::isfinite(value)) {
      fail(ConfigErrc::kBadValue, n, fmt::format("{}: '{}' is not a number", key, *v));
    }
    return value;
  }

  bool bool_attr_or(const XmlNode& n, std::string_view key, bool fallback) const {
    auto v = attr(n, key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    fail(ConfigErrc::kBadValue, n, fmt::format("{}: '{}' is not true/false", key, *v));
  }

  std::uint64_t bandwidth_attr(const XmlNode& n) const {
    auto v = attr(n, "bandwidth");
    if (!v) return 100'000'000;
    std::string_view text = *v;
    std::uint64_t scale = 1;
    if (!text.empty()) {
      switch (text.back()) {
        case 'k': scale = 1'000; break;
        case 'M': scale = 1'000'000; break;
        case 'G': scale = 1'000'000'000; break;
        default: break;
      }
      if (scale != 1) text.remove_suffix(1);
    }
    std::uint64_t value = parse_uint(n, "bandwidth", text, std::numeric_limits<std::uint32_t>::max());
    if (value == 0) fail(ConfigErrc::kBadValue, n, "bandwidth must be positive");
    return value * scale;
  }

  SdParams read_sd(const XmlNode& n) const {
    allow_attrs(n, {"multicast", "offer-cycle-ms", "find-cycle-ms", "ttl", "renew-fraction",
                    "initial-delay-min-ms", "initial-delay-max-ms", "renewal"});
    allow_children(n, {});
    SdParams sd;
    if (auto m = attr(n, "multicast")) {
      auto ep = Endpoint::parse(*m);
      if (!ep || !ep->address.is_multicast()) {
        fail(ConfigErrc::kBadValue, n, fmt::format("multicast: '{}' is not a multicast ip:port", *m));
      }
      sd.multicast = *ep;
    }
    sd.offer_cycle_ms = uint_attr_or<std::uint32_t>(n, "offer-cycle-ms", sd.offer_cycle_ms);
    sd.find_cycle_ms = uint_attr_or<std::uint32_t>(n, "find-cycle-ms", sd.find_cycle_ms);
    sd.ttl_s = uint_attr_or<std::uint32_t>(n, "ttl", sd.ttl_s);
    sd.renew_fraction = double_attr_or(n, "renew-fraction", sd.renew_fraction);
    sd.initial_delay_min_ms = uint_attr_or<std::uint32_t>(n, "initial-delay-min-ms", sd.initial_delay_min_ms);
    sd.initial_delay_max_ms = uint_attr_or<std::uint32_t>(n, "initial-delay-max-ms", sd.initial_delay_max_ms);
    sd.renewal = bool_attr_or(n, "renewal", sd.renewal);
    if (sd.offer_cycle_ms == 0 || sd.find_cycle_ms == 0) fail(ConfigErrc::kBadValue, n, "cycles must be positive");
    if (sd.ttl_s == 0 || sd.ttl_s > 0xFFFFFF) fail(ConfigErrc::kBadValue, n, "ttl must be in [1, 16777215]");
    if (!(sd.renew_fraction > 0.0 && sd.renew_fraction < 1.0)) {
      fail(ConfigErrc::kBadValue, n, "renew-fraction must be in (0, 1)");
    }
    if (sd.initial_delay_min_ms > sd.initial_delay_max_ms) {
      fail(ConfigErrc::kBadValue, n, "initial-delay-min-ms exceeds initial-delay-max-ms");
    }
    return sd;
  }

  void read_layouts(const XmlNode& n, NetworkConfig& cfg) const {
    allow_attrs(n, {});
    allow_children(n, {"layout"});
    for (const auto& ln : n.children) {
      allow_attrs(ln, {"id"});
      allow_children(ln, {"field"});
      LayoutDef def;
      def.id = required(ln, "id");
      if (def.id.empty()) fail(ConfigErrc::kBadValue, ln, "layout id must not be empty");
      if (cfg.find_layout(def.id)) fail(ConfigErrc::kDuplicateId, ln, fmt::format("layout '{}'", def.id));
      for (const auto& fn : ln.children) {
        allow_attrs(fn, {"name", "type", "array-length"});
        signals::FieldSpec f;
        f.name = required(fn, "name");
        if (f.name.empty() || f.name.find('/') != std::string::npos) {
          fail(ConfigErrc::kBadValue, fn, fmt::format("field name '{}'", f.name));
        }
        std::string type = required(fn, "type");
        auto kind = signals::parse_kind(type);
        if (!kind) fail(ConfigErrc::kBadValue, fn, fmt::format("unknown field type '{}'", type));
        f.kind = *kind;
        if (auto len = attr(fn, "array-length")) {
          if (f.kind != signals::ScalarKind::kU8) {
            fail(ConfigErrc::kBadValue, fn, "array-length is only supported for uint8 fields");
          }
          f.array_length = static_cast<std::size_t>(parse_uint(fn, "array-length", *len, 1400));
          if (f.array_length == 0) fail(ConfigErrc::kBadValue, fn, "array-length must be positive");
          f.kind = signals::ScalarKind::kU8Array;
        }
        for (const auto& existing : def.layout.fields) {
          if (existing.name == f.name) {
            fail(ConfigErrc::kDuplicateId, fn, fmt::format("field '{}' in layout '{}'", f.name, def.id));
          }
        }
        def.layout.fields.push_back(std::move(f));
      }
      cfg.layouts.push_back(std::move(def));
    }
  }

  void read_services(const XmlNode& n, NetworkConfig& cfg) const {
    allow_attrs(n, {});
    allow_children(n, {"service"});
    for (const auto& sn : n.children) {
      allow_attrs(sn, {"id", "instance", "major", "minor"});
      allow_children(sn, {"eventgroup"});
      ServiceDef svc;
      svc.id = uint_attr<std::uint16_t>(sn, "id");
      svc.instance = uint_attr<std::uint16_t>(sn, "instance");
      svc.major_version = uint_attr_or<std::uint8_t>(sn, "major", 1);
      svc.minor_version = uint_attr_or<std::uint32_t>(sn, "minor", 0);
      if (svc.id == 0xFFFF || svc.id == 0) fail(ConfigErrc::kBadValue, sn, "service id 0x0000/0xFFFF is reserved");
      if (svc.instance == 0xFFFF || svc.instance == 0) {
        fail(ConfigErrc::kBadValue, sn, "instance id 0x0000/0xFFFF is reserved");
      }
      if (cfg.find_service(svc.id, svc.instance)) {
        fail(ConfigErrc::kDuplicateId, sn, fmt::format("service {:#06x}/{:#06x}", svc.id, svc.instance));
      }
      for (const auto& gn : sn.children) {
        allow_attrs(gn, {"id"});
        allow_children(gn, {"event", "event-ref"});
        EventgroupDef eg;
        eg.id = uint_attr<std::uint16_t>(gn, "id");
        for (const auto& other : svc.eventgroups) {
          if (other.id == eg.id) fail(ConfigErrc::kDuplicateId, gn, fmt::format("eventgroup {:#06x}", eg.id));
        }
        for (const auto& en : gn.children) {
          std::uint16_t event_id = 0;
          if (en.name == "event") {
            allow_attrs(en, {"id", "layout", "cycle-ms"});
            EventDef ev;
            ev.id = uint_attr<std::uint16_t>(en, "id");
            ev.layout = required(en, "layout");
            ev.cycle_ms = uint_attr_or<std::uint32_t>(en, "cycle-ms", 0);
            if (svc.find_event(ev.id)) fail(ConfigErrc::kDuplicateId, en, fmt::format("event {:#06x}", ev.id));
            if (!cfg.find_layout(ev.layout)) {
              fail(ConfigErrc::kDanglingRef, en, fmt::format("layout '{}' is not declared", ev.layout));
            }
            event_id = ev.id;
            svc.events.push_back(std::move(ev));
          } else {
            allow_attrs(en, {"id"});
            event_id = uint_attr<std::uint16_t>(en, "id");
            if (!svc.find_event(event_id)) {
              fail(ConfigErrc::kDanglingRef, en, fmt::format("event {:#06x} is not declared earlier", event_id));
            }
          }
          if (std::find(eg.event_ids.begin(), eg.event_ids.end(), event_id) != eg.event_ids.end()) {
            fail(ConfigErrc::kDuplicateId, en, fmt::format("event {:#06x} listed twice", event_id));
          }
          eg.event_ids.push_back(event_id);
        }
        svc.eventgroups.push_back(std::move(eg));
      }
      cfg.services.push_back(std::move(svc));
    }
  }

  void read_hosts(const XmlNode& n, NetworkConfig& cfg) const {
    allow_attrs(n, {});
    allow_children(n, {"host"});
    for (const auto& hn : n.children) {
      allow_attrs(hn, {"name", "ip", "port"});
      allow_children(hn, {"provide", "consume"});
      HostDef host;
      host.name = required(hn, "name");
      if (host.name.empty() || host.name.find_first_of("/, ") != std::string::npos) {
        fail(ConfigErrc::kBadValue, hn, fmt::format("host name '{}'", host.name));
      }
      if (cfg.find_host(host.name)) fail(ConfigErrc::kDuplicateId, hn, fmt::format("host '{}'", host.name));
      std::string ip = required(hn, "ip");
      auto address = Ipv4Address::parse(ip);
      if (!address || address->is_multicast()) fail(ConfigErrc::kBadValue, hn, fmt::format("ip '{}'", ip));
      host.endpoint = Endpoint{*address, uint_attr<std::uint16_t>(hn, "port")};
      if (host.endpoint.port == 0) fail(ConfigErrc::kBadValue, hn, "port must be nonzero");
      for (const auto& other : cfg.hosts) {
        if (other.endpoint == host.endpoint) {
          fail(ConfigErrc::kDuplicateId, hn, fmt::format("endpoint {}", host.endpoint.to_string()));
        }
      }
      std::set<std::uint16_t> service_ids;
      for (const auto& dn : hn.children) {
        std::uint16_t svc_id = uint_attr<std::uint16_t>(dn, "service");
        std::uint16_t inst = uint_attr<std::uint16_t>(dn, "instance");
        const ServiceDef* svc = cfg.find_service(svc_id, inst);
        if (!svc) fail(ConfigErrc::kDanglingRef, dn, fmt::format("service {:#06x}/{:#06x}", svc_id, inst));
        if (!service_ids.insert(svc_id).second) {
          fail(ConfigErrc::kDuplicateId, dn, fmt::format("service {:#06x} twice on host '{}'", svc_id, host.name));
        }
        if (dn.name == "provide") {
          allow_attrs(dn, {"service", "instance", "autostart"});
          allow_children(dn, {});
          host.provides.push_back(ProvideDecl{svc_id, inst, bool_attr_or(dn, "autostart", true)});
        } else {
          allow_attrs(dn, {"service", "instance", "major"});
          allow_children(dn, {"eventgroup"});
          ConsumeDecl c{svc_id, inst, uint_attr_or<std::uint8_t>(dn, "major", svc->major_version), {}};
          for (const auto& gn : dn.children) {
            allow_attrs(gn, {"id"});
            std::uint16_t eg = uint_attr<std::uint16_t>(gn, "id");
            bool known = std::any_of(svc->eventgroups.begin(), svc->eventgroups.end(),
                                     [eg](const EventgroupDef& d) { return d.id == eg; });
            if (!known) fail(ConfigErrc::kDanglingRef, gn, fmt::format("eventgroup {:#06x}", eg));
            if (std::find(c.eventgroups.begin(), c.eventgroups.end(), eg) != c.eventgroups.end()) {
              fail(ConfigErrc::kDuplicateId, gn, fmt::format("eventgroup {:#06x} twice", eg));
            }
            c.eventgroups.push_back(eg);
          }
          if (c.eventgroups.empty()) fail(ConfigErrc::kBadValue, dn, "<consume> needs at least one <eventgroup>");
          host.consumes.push_back(std::move(c));
        }
      }
      cfg.hosts.push_back(std::move(host));
    }
  }

  void read_topology(const XmlNode& n, NetworkConfig& cfg) const {
    allow_attrs(n, {});
    allow_children(n, {"switch", "link"});
    for (const auto& c : n.children) {
      if (c.name != "switch") continue;
      allow_attrs(c, {"name"});
      allow_children(c, {});
      std::string name = required(c, "name");
      if (name.empty()) fail(ConfigErrc::kBadValue, c, "switch name must not be empty");
      if (cfg.find_host(name) ||
          std::find(cfg.switches.begin(), cfg.switches.end(), name) != cfg.switches.end()) {
        fail(ConfigErrc::kDuplicateId, c, fmt::format("node '{}'", name));
      }
      cfg.switches.push_back(name);
    }
    for (const auto& c : n.children) {
      if (c.name != "link") continue;
      allow_attrs(c, {"a", "b", "bandwidth", "delay-us", "delay-s", "queue-frames"});
      allow_children(c, {});
      LinkDef link;
      link.a = required(c, "a");
      link.b = required(c, "b");
      for (const auto* end : {&link.a, &link.b}) {
        bool known = cfg.find_host(*end) ||
                     std::find(cfg.switches.begin(), cfg.switches.end(), *end) != cfg.switches.end();
        if (!known) fail(ConfigErrc::kDanglingRef, c, fmt::format("link end '{}' is not a host or switch", *end));
      }
      if (link.a == link.b) fail(ConfigErrc::kBadValue, c, "link connects a node to itself");
      link.bandwidth_bps = bandwidth_attr(c);
      if (attr(c, "delay-s")) {
        link.propagation_delay_s = double_attr_or(c, "delay-s", 0.0);
      } else {
        link.propagation_delay_s = double_attr_or(c, "delay-us", 0.0) * 1e-6;
      }
      if (link.propagation_delay_s < 0) fail(ConfigErrc::kBadValue, c, "negative delay");
      if (auto q = attr(c, "queue-frames")) {
        link.queue_frames = static_cast<std::size_t>(parse_uint(c, "queue-frames", *q, 1u << 30));
        if (*link.queue_frames == 0) fail(ConfigErrc::kBadValue, c, "queue-frames must be positive");
      }
      cfg.links.push_back(std::move(link));
    }
  }

  // Every host on exactly one link; the node graph must be a tree so that
  // multicast flooding terminates.
  void check_topology(const NetworkConfig& cfg, const XmlNode& root) const {
    const XmlNode* topo = child(root, "topology");
    const XmlNode& where = topo ? *topo : root;
    std::map<std::string, int> degree;
    for (const auto& l : cfg.links) {
      ++degree[l.a];
      ++degree[l.b];
    }
    for (const auto& h : cfg.hosts) {
      if (degree[h.name] != 1) {
        fail(ConfigErrc::kBadValue, where,
             fmt::format("host '{}' must attach to exactly one link (has {})", h.name, degree[h.name]));
      }
    }
    std::size_t nodes = cfg.hosts.size() + cfg.switches.size();
    if (nodes == 0) return;
    if (cfg.links.size() != nodes - 1) {
      fail(ConfigErrc::kBadValue, where,
           fmt::format("topology must be a tree: {} nodes need {} links, found {}", nodes, nodes - 1,
                       cfg.links.size()));
    }
    std::map<std::string, std::string> parent;
    auto find = [&parent](std::string x) {
      while (parent.count(x) && parent[x] != x) x = parent[x];
      return x;
    };
    for (const auto& h : cfg.hosts) parent[h.name] = h.name;
    for (const auto& s : cfg.switches) parent[s] = s;
    for (const auto& l : cfg.links) {
      auto ra = find(l.a);
      auto rb = find(l.b);
      if (ra == rb) fail(ConfigErrc::kBadValue, where, fmt::format("link {} - {} closes a loop", l.a, l.b));
      parent[ra] = rb;
    }
  }

  std::string source_;
};

}  // namespace

const EventDef* ServiceDef::find_event(std::uint16_t event_id) const {
  for (const auto& e : events) {
    if (e.id == event_id) return &e;
  }
  return nullptr;
}

const HostDef* NetworkConfig::find_host(std::string_view host_name) const {
  for (const auto& h : hosts) {
    if (h.name == host_name) return &h;
  }
  return nullptr;
}

const ServiceDef* NetworkConfig::find_service(std::uint16_t id, std::uint16_t instance) const {
  for (const auto& s : services) {
    if (s.id == id && s.instance == instance) return &s;
  }
  return nullptr;
}

const LayoutDef* NetworkConfig::find_layout(std::string_view id) const {
  for (const auto& l : layouts) {
    if (l.id == id) return &l;
  }
  return nullptr;
}

const char* to_string(ConfigErrc code) {
  switch (code) {
    case ConfigErrc::kXmlSyntax: return "XML_SYNTAX";
    case ConfigErrc::kDuplicateId: return "DUPLICATE_ID";
    case ConfigErrc::kDanglingRef: return "DANGLING_REF";
    case ConfigErrc::kBadValue: return "BAD_VALUE";
    case ConfigErrc::kIo: return "IO";
  }
  return "?";
}

ConfigError::ConfigError(ConfigErrc code, std::string file, int line, std::string detail)
    : std::runtime_error(fmt::format("{}:{}: {}: {}", file, line, to_string(code), detail)),
      code_(code),
      file_(std::move(file)),
      line_(line),
      detail_(std::move(detail)) {}

NetworkConfig parse_config(std::string_view xml, std::string_view source_name) {
  DomBuilder dom(xml, std::string(source_name));
  return ConfigReader(std::string(source_name)).read(dom.take_root());
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(ConfigErrc::kIo, path.string(), 0, "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

std::string to_xml(const NetworkConfig& cfg) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += fmt::format("<network name=\"{}\">\n", cfg.name);
  const SdParams& sd = cfg.sd;
  out += fmt::format(
      "  <sd multicast=\"{}\" offer-cycle-ms=\"{}\" find-cycle-ms=\"{}\" ttl=\"{}\" renew-fraction=\"{}\" "
      "initial-delay-min-ms=\"{}\" initial-delay-max-ms=\"{}\" renewal=\"{}\"/>\n",
      sd.multicast.to_string(), sd.offer_cycle_ms, sd.find_cycle_ms, sd.ttl_s, sd.renew_fraction,
      sd.initial_delay_min_ms, sd.initial_delay_max_ms, sd.renewal ? "true" : "false");
  out += "  <layouts>\n";
  for (const auto& l : cfg.layouts) {
    out += fmt::format("    <layout id=\"{}\">\n", l.id);
    for (const auto& f : l.layout.fields) {
      if (f.kind == signals::ScalarKind::kU8Array) {
        out += fmt::format("      <field name=\"{}\" type=\"uint8\" array-length=\"{}\"/>\n", f.name, f.array_length);
      } else {
        out += fmt::format("      <field name=\"{}\" type=\"{}\"/>\n", f.name, signals::to_string(f.kind));
      }
    }
    out += "    </layout>\n";
  }
  out += "  </layouts>\n  <services>\n";
  for (const auto& s : cfg.services) {
    out += fmt::format("    <service id=\"0x{:04x}\" instance=\"0x{:04x}\" major=\"{}\" minor=\"{}\">\n", s.id,
                       s.instance, s.major_version, s.minor_version);
    std::set<std::uint16_t> declared;
    for (const auto& eg : s.eventgroups) {
      out += fmt::format("      <eventgroup id=\"0x{:04x}\">\n", eg.id);
      for (std::uint16_t id : eg.event_ids) {
        if (declared.insert(id).second) {
          const EventDef* e = s.find_event(id);
          out += fmt::format("        <event id=\"0x{:04x}\" layout=\"{}\" cycle-ms=\"{}\"/>\n", e->id, e->layout,
                             e->cycle_ms);
        } else {
          out += fmt::format("        <event-ref id=\"0x{:04x}\"/>\n", id);
        }
      }
      out += "      </eventgroup>\n";
    }
    out += "    </service>\n";
  }
  out += "  </services>\n  <hosts>\n";
  for (const auto& h : cfg.hosts) {
    out += fmt::format("    <host name=\"{}\" ip=\"{}\" port=\"{}\">\n", h.name, h.endpoint.address.to_string(),
                       h.endpoint.port);
    for (const auto& p : h.provides) {
      out += fmt::format("      <provide service=\"0x{:04x}\" instance=\"0x{:04x}\" autostart=\"{}\"/>\n", p.service,
                         p.instance, p.autostart ? "true" : "false");
    }
    for (const auto& c : h.consumes) {
      out += fmt::format("      <consume service=\"0x{:04x}\" instance=\"0x{:04x}\" major=\"{}\">\n", c.service,
                         c.instance, c.major_version);
      for (std::uint16_t eg : c.eventgroups) out += fmt::format("        <eventgroup id=\"0x{:04x}\"/>\n", eg);
      out += "      </consume>\n";
    }
    out += "    </host>\n";
  }
  out += "  </hosts>\n  <topology>\n";
  for (const auto& s : cfg.switches) out += fmt::format("    <switch name=\"{}\"/>\n", s);
  for (const auto& l : cfg.links) {
    out += fmt::format("    <link a=\"{}\" b=\"{}\" bandwidth=\"{}\" delay-s=\"{}\"", l.a, l.b, l.bandwidth_bps,
                       l.propagation_delay_s);
    if (l.queue_frames) out += fmt::format(" queue-frames=\"{}\"", *l.queue_frames);
    out += "/>\n";
  }
  out += "  </topology>\n</network>\n";
  return out;
}

}  // namespace restbus::config
