#include "maleval/reduction.hpp"

#include <deque>

#include "maleval/errors.hpp"
#include "maleval/json_util.hpp"

namespace maleval::reduction {

const char* entrypoint_source_name(EntrypointSource source) {
  switch (source) {
    case EntrypointSource::ManifestLifecycle: return "manifest_lifecycle";
    case EntrypointSource::FrameworkOverride: return "framework_override";
  }
  return "unknown";
}

LifecycleDb default_lifecycle_db() {
  LifecycleDb db;
  db.lifecycle_methods["activity"] = {"onCreate", "onStart", "onResume", "onPause",
                                      "onStop", "onDestroy", "onRestart"};
  db.lifecycle_methods["service"] = {"onCreate", "onStartCommand", "onBind", "onUnbind",
                                     "onDestroy"};
  db.lifecycle_methods["receiver"] = {"onReceive"};
  db.lifecycle_methods["provider"] = {"onCreate", "query", "insert", "update", "delete"};
  db.framework_signatures = {
      "android.view.View$OnClickListener.onClick(android.view.View):void",
      "android.view.View$OnLongClickListener.onLongClick(android.view.View):boolean",
      "java.lang.Runnable.run():void",
      "java.lang.Thread.run():void",
      "android.os.Handler.handleMessage(android.os.Message):void",
      "android.content.SharedPreferences$OnSharedPreferenceChangeListener."
      "onSharedPreferenceChanged(android.content.SharedPreferences,java.lang.String):void",
      "android.location.LocationListener.onLocationChanged(android.location.Location):void",
      "android.app.Application.onCreate():void",
      "android.os.AsyncTask.doInBackground(java.lang.Object[]):java.lang.Object",
      "android.accessibilityservice.AccessibilityService.onAccessibilityEvent("
      "android.view.accessibility.AccessibilityEvent):void",
      "android.telephony.PhoneStateListener.onCallStateChanged(int,java.lang.String):void",
      "android.webkit.WebViewClient.onPageFinished(android.webkit.WebView,java.lang.String):void",
  };
  return db;
}

LifecycleDb load_lifecycle_db(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  LifecycleDb db;
  for (const auto& [kind, methods] : doc.items()) {
    if (kind == "framework_signatures") {
      for (const auto& sig : methods) {
        db.framework_signatures.insert(
            codebase::normalize_signature(sig.get<std::string>()));
      }
      continue;
    }
    for (const auto& name : methods) {
      db.lifecycle_methods[kind].push_back(name.get<std::string>());
    }
  }
  return db;
}

void save_lifecycle_db(const LifecycleDb& db, const std::filesystem::path& path) {
  json doc;
  for (const auto& [kind, methods] : db.lifecycle_methods) {
    doc[kind] = methods;
  }
  doc["framework_signatures"] =
      std::vector<std::string>(db.framework_signatures.begin(), db.framework_signatures.end());
  write_json_file(path, doc);
}

namespace {

// Signature of `method` as declared on framework class `owner`, preserving
// the descriptor of the overriding function.
std::string rebase_signature(const std::string& signature, const std::string& owner) {
  const std::size_t open = signature.find('(');
  const std::size_t dot = signature.rfind('.', open);
  if (dot == std::string::npos) {
    return {};
  }
  return owner + signature.substr(dot);
}

bool override_matches_framework(const codebase::CodebaseBundle& bundle,
                                const codebase::FunctionRecord& fn, const LifecycleDb& db) {
  if (!fn.override_of.empty()) {
    return db.framework_signatures.count(fn.override_of) > 0;
  }
  // Fallback: climb the hierarchy looking for a framework ancestor declaring
  // the same method.
  std::deque<std::string> queue{fn.class_name};
  std::set<std::string> seen{fn.class_name};
  while (!queue.empty()) {
    const std::string current = queue.front();
    queue.pop_front();
    auto it = bundle.hierarchy.classes.find(current);
    if (it == bundle.hierarchy.classes.end()) {
      continue;
    }
    if (it->second.framework && current != fn.class_name) {
      const std::string candidate = rebase_signature(fn.signature, current);
      if (db.framework_signatures.count(candidate) > 0) {
        return true;
      }
    }
    for (const auto& parent : bundle.hierarchy.parents(current)) {
      if (seen.insert(parent).second) {
        queue.push_back(parent);
      }
    }
  }
  return false;
}

}  // namespace

EntrypointSet identify_entrypoints(const codebase::CodebaseBundle& bundle, const LifecycleDb& db,
                                   std::vector<std::string>* warnings) {
  EntrypointSet out;

  // (a) lifecycle methods of manifest-declared components
  for (const auto& comp : bundle.manifest.components) {
    auto methods_it = db.lifecycle_methods.find(comp.kind);
    if (methods_it == db.lifecycle_methods.end()) {
      continue;
    }
    bool any_found = false;
    for (const auto& fn : bundle.functions) {
      if (fn.class_name != comp.class_name) {
        continue;
      }
      const std::string method = codebase::signature_method(fn.signature);
      for (const auto& lifecycle : methods_it->second) {
        if (method == lifecycle) {
          out.ids.emplace(fn.id, EntrypointSource::ManifestLifecycle);
          any_found = true;
          break;
        }
      }
    }
    if (!any_found && warnings) {
      warnings->push_back("component '" + comp.class_name +
                          "' declares no lifecycle method found in the bundle");
    }
  }

  // (b) overrides of framework methods
  for (const auto& fn : bundle.functions) {
    if (out.contains(fn.id)) {
      continue;  // already tagged; first tag wins
    }
    if (override_matches_framework(bundle, fn, db)) {
      out.ids.emplace(fn.id, EntrypointSource::FrameworkOverride);
    }
  }
  return out;
}

std::set<std::string> ReachableSet::ids() const {
  std::set<std::string> out;
  for (const auto& [id, d] : depth) {
    (void)d;
    out.insert(id);
  }
  return out;
}

ReachableSet reachable_functions(const codebase::CodebaseBundle& bundle,
                                 const EntrypointSet& entrypoints) {
  if (entrypoints.empty()) {
    raise(ErrorKind::EmptyEntrypointSet, "sample '" + bundle.label.sample_id + "'");
  }

  std::map<std::string, std::vector<std::string>> adjacency;
  for (const auto& [from, to] : bundle.callgraph.edges) {
    adjacency[from].push_back(to);
  }

  ReachableSet reachable;
  std::deque<std::string> queue;
  // Seed in sorted id order so parents are deterministic.
  for (const auto& [id, source] : entrypoints.ids) {
    (void)source;
    reachable.depth[id] = 0;
    reachable.parent[id] = "";
    queue.push_back(id);
  }
  while (!queue.empty()) {
    const std::string current = queue.front();
    queue.pop_front();
    auto adj_it = adjacency.find(current);
    if (adj_it == adjacency.end()) {
      continue;
    }
    for (const auto& next : adj_it->second) {
      if (reachable.depth.count(next) > 0) {
        continue;
      }
      reachable.depth[next] = reachable.depth[current] + 1;
      reachable.parent[next] = current;
      queue.push_back(next);
    }
  }
  return reachable;
}

std::vector<std::string> witness_path(const ReachableSet& reachable, const std::string& id) {
  std::vector<std::string> path;
  std::string current = id;
  while (true) {
    auto it = reachable.parent.find(current);
    if (it == reachable.parent.end()) {
      return {};  // not reachable
    }
    path.push_back(current);
    if (it->second.empty()) {
      break;
    }
    current = it->second;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

ReductionStats reduction_stats(const codebase::CodebaseBundle& bundle,
                               const ReachableSet& reachable) {
  ReductionStats stats;
  stats.total_functions = bundle.functions.size();
  stats.reachable_count = reachable.size();
  for (const auto& [id, d] : reachable.depth) {
    (void)id;
    if (d == 0) {
      ++stats.entrypoint_count;
    }
  }
  stats.reduction_pct =
      stats.total_functions == 0
          ? 0.0
          : 100.0 * (1.0 - static_cast<double>(stats.reachable_count) /
                               static_cast<double>(stats.total_functions));
  return stats;
}

}  // namespace maleval::reduction
