#include "maleval/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "maleval/errors.hpp"
#include "maleval/tfidf.hpp"

namespace maleval::evaluation {

void MetricWeights::validate() const {
  if (std::fabs(w_i + w_c + w_e - 1.0) > 1e-9) {
    raise(ErrorKind::ConfigError, "report-quality weights must sum to 1");
  }
  if (std::fabs(w_aa + w_ds - 1.0) > 1e-9) {
    raise(ErrorKind::ConfigError, "workload-reduction weights must sum to 1");
  }
}

// ---------------------------------------------------------------------------
// Task 1

double fidelity_from_confidences(double p_full, double p_ablated) {
  if (p_full <= 0.0) {
    raise(ErrorKind::ScaleMismatch, "full-context confidence must be positive");
  }
  const double fs = 1.0 - p_ablated / p_full;
  return std::clamp(fs, 0.0, 1.0);
}

namespace {

std::string concatenated_document(const std::vector<representation::StructuralRep>& reps,
                                  const std::set<std::string>& removed) {
  // function_id order keeps documents independent of the ranking under test
  std::vector<const representation::StructuralRep*> ordered;
  for (const auto& rep : reps) {
    if (removed.count(rep.function_id) == 0) {
      ordered.push_back(&rep);
    }
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const auto* a, const auto* b) { return a->function_id < b->function_id; });
  std::string doc;
  for (const auto* rep : ordered) {
    doc += rep->context_description;
    doc += '\n';
  }
  return doc;
}

std::set<std::string> top_k_ids(const std::vector<representation::StructuralRep>& reps,
                                double k_percent) {
  const std::size_t n = reps.size();
  const auto ranked = representation::rank_reps(reps);
  const std::size_t m =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * k_percent / 100.0));
  std::set<std::string> removed;
  for (std::size_t i = 0; i < m && i < ranked.reps.size(); ++i) {
    removed.insert(ranked.reps[i].function_id);
  }
  return removed;
}

}  // namespace

FidelityResult fidelity_score(const std::vector<FidelitySample>& samples,
                              const FidelityConfig& config) {
  if (config.k_percent < 0.0 || config.k_percent >= 100.0) {
    raise(ErrorKind::ConfigError, "k must lie in [0, 100)");
  }
  std::set<std::string> categories;
  for (const auto& sample : samples) {
    categories.insert(sample.category);
  }
  if (categories.size() < 2) {
    raise(ErrorKind::DegenerateSplit, "fidelity needs at least 2 categories, got " +
                                          std::to_string(categories.size()));
  }

  // deterministic split under the seed; hand-rolled Fisher-Yates keeps the
  // permutation identical across standard libraries
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  std::size_t train_n = static_cast<std::size_t>(
      std::floor(static_cast<double>(samples.size()) * config.train_fraction));
  train_n = std::clamp<std::size_t>(train_n, 1, samples.size() - 1);

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<long>(train_n));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<long>(train_n), order.end());

  std::map<std::string, int> label_of;
  for (const auto& category : categories) {
    const int next = static_cast<int>(label_of.size());
    label_of[category] = next;
  }

  std::set<std::string> train_categories;
  for (std::size_t i : train_idx) {
    train_categories.insert(samples[i].category);
  }
  for (const auto& category : categories) {
    if (train_categories.count(category) == 0) {
      raise(ErrorKind::DegenerateSplit, "category '" + category + "' absent from train split");
    }
  }

  std::vector<std::string> train_docs;
  std::vector<int> train_labels;
  for (std::size_t i : train_idx) {
    train_docs.push_back(concatenated_document(samples[i].reps, {}));
    train_labels.push_back(label_of[samples[i].category]);
  }

  text::TfidfVectorizer vectorizer;
  vectorizer.fit(train_docs);

  gbdt::GbdtClassifier classifier;
  classifier.fit(vectorizer.transform_all(train_docs), train_labels, label_of.size(),
                 config.classifier);

  FidelityResult result;
  for (std::size_t i : train_idx) {
    result.train_ids.push_back(samples[i].sample_id);
  }

  double fs_sum = 0.0;
  for (std::size_t i : test_idx) {
    const auto& sample = samples[i];
    result.test_ids.push_back(sample.sample_id);

    const auto full_features = vectorizer.transform(concatenated_document(sample.reps, {}));
    const auto full_proba = classifier.predict_proba(full_features);
    const int predicted =
        static_cast<int>(std::max_element(full_proba.begin(), full_proba.end()) -
                         full_proba.begin());
    const double p_full = full_proba[static_cast<std::size_t>(predicted)];
    if (!std::isfinite(p_full)) {
      raise(ErrorKind::ClassifierNotConverged, "non-finite confidence on sample '" +
                                                   sample.sample_id + "'");
    }

    const auto removed = top_k_ids(sample.reps, config.k_percent);
    const auto ablated_features =
        vectorizer.transform(concatenated_document(sample.reps, removed));
    const double p_ablated =
        classifier.predict_proba(ablated_features)[static_cast<std::size_t>(predicted)];

    const double fs = fidelity_from_confidences(p_full, p_ablated);
    result.per_sample.emplace_back(sample.sample_id, fs);
    fs_sum += fs;
  }
  result.mean_fs = test_idx.empty() ? 0.0 : fs_sum / static_cast<double>(test_idx.size());
  return result;
}

// ---------------------------------------------------------------------------
// Task 2

double csr(std::size_t reachable_count, const std::set<std::string>& selected_ids,
           const std::set<std::string>& gt_apis,
           const std::map<std::string, std::vector<std::string>>& invoked) {
  if (gt_apis.empty()) {
    raise(ErrorKind::EmptyGroundTruth, "L_A is empty");
  }
  if (selected_ids.empty()) {
    raise(ErrorKind::EmptySelection, "no functions selected");
  }
  if (reachable_count == 0) {
    raise(ErrorKind::EmptySelection, "reachable set is empty");
  }
  std::set<std::string> covered;
  for (const auto& id : selected_ids) {
    auto it = invoked.find(id);
    if (it == invoked.end()) {
      continue;
    }
    for (const auto& api : it->second) {
      if (gt_apis.count(api) > 0) {
        covered.insert(api);
      }
    }
  }
  const double coverage =
      static_cast<double>(covered.size()) / static_cast<double>(gt_apis.size());
  const double selection =
      static_cast<double>(selected_ids.size()) / static_cast<double>(reachable_count);
  return coverage / selection;
}

// ---------------------------------------------------------------------------
// Task 3

RqResult judge_report_quality(const groundtruth::GeneratedReport& generated,
                              const groundtruth::GroundTruthReport& ground_truth,
                              gateway::Gateway& gw, const gateway::ModelSpec& judge,
                              const MetricWeights& weights) {
  weights.validate();
  std::string prompt = std::string(kRqJudgeMarker) +
                       "\nYou are a cybersecurity analyst. Compare the generated report "
                       "against the ground-truth report and score Insight, Comprehensiveness "
                       "and Evidence Quality on a 0-100 scale.\n"
                       "Reply with a JSON object {\"insight\": n, \"comprehensiveness\": n, "
                       "\"evidence_quality\": n, \"justification\": \"...\"}.\n"
                       "Sample: " +
                       generated.sample_id + "\nGenerated report:\n" +
                       groundtruth::report_to_json(generated).dump(2) +
                       "\nGround-truth report:\n" +
                       groundtruth::gt_to_json(ground_truth).dump(2) + "\n";
  const json reply = gw.complete_structured(judge, prompt, "rq_judgement");

  RqResult result;
  result.scores.insight = reply["insight"].get<double>();
  result.scores.comprehensiveness = reply["comprehensiveness"].get<double>();
  result.scores.evidence_quality = reply["evidence_quality"].get<double>();
  result.scores.justification = reply.value("justification", "");
  result.rq = weights.w_i * result.scores.insight + weights.w_c * result.scores.comprehensiveness +
              weights.w_e * result.scores.evidence_quality;
  return result;
}

double evidence_authenticity(const groundtruth::GeneratedReport& generated,
                             const std::vector<representation::StructuralRep>& cited_reps,
                             gateway::Gateway& gw, const gateway::ModelSpec& judge) {
  if (generated.present_behaviors.empty()) {
    raise(ErrorKind::NoBehaviors,
          "sample '" + generated.sample_id + "' claims no behaviors; EAS undefined");
  }
  std::string prompt = std::string(kEasJudgeMarker) +
                       "\nAssess whether the cited functions genuinely support each claimed "
                       "behavior. Score each behavior 0-100.\n"
                       "Reply with a JSON object {\"behavior_scores\": [{\"behavior\": \"...\", "
                       "\"score\": n}]}.\n"
                       "Sample: " +
                       generated.sample_id + "\nBehaviors:\n";
  for (const auto& behavior : generated.present_behaviors) {
    prompt += "- " + behavior.behavior + " (evidence: " + behavior.evidence + "; functions: ";
    for (std::size_t i = 0; i < behavior.related_functions.size(); ++i) {
      if (i > 0) prompt += ", ";
      prompt += behavior.related_functions[i];
    }
    prompt += ")\n";
  }
  prompt += "Cited function representations:\n";
  if (cited_reps.empty()) {
    prompt += "(none resolved)\n";
  }
  for (const auto& rep : cited_reps) {
    prompt += representation::render_rep_block(rep);
  }

  const json reply = gw.complete_structured(judge, prompt, "eas_judgement");
  const auto& scores = reply["behavior_scores"];
  if (scores.empty()) {
    raise(ErrorKind::UnparseableReply,
          "judge returned no behavior scores for '" + generated.sample_id + "'");
  }
  double sum = 0.0;
  for (const auto& entry : scores) {
    sum += entry["score"].get<double>();
  }
  return sum / static_cast<double>(scores.size());
}

SasResult syntax_authenticity(const groundtruth::GeneratedReport& generated,
                              const std::vector<std::string>& input_signatures) {
  SasResult result;
  result.input_count = input_signatures.size();
  const auto cited = generated.cited_functions();
  result.cited_count = cited.size();

  const std::set<std::string> input_set(input_signatures.begin(), input_signatures.end());
  for (const auto& fn : cited) {
    if (input_set.count(fn) > 0) {
      ++result.cited_in_input;
    }
  }
  result.literal_ratio = result.input_count == 0
                             ? 0.0
                             : static_cast<double>(result.cited_count) /
                                   static_cast<double>(result.input_count);
  if (generated.present_behaviors.empty()) {
    result.sas = 1.0;  // nothing claimed, nothing to ground
  } else if (cited.empty()) {
    result.sas = 0.0;  // behaviors without any grounding
  } else {
    result.sas = static_cast<double>(result.cited_in_input) /
                 static_cast<double>(result.cited_count);
  }
  return result;
}

Task3Result run_task3(const codebase::CodebaseBundle& bundle,
                      const representation::RankedRepList& ranked, gateway::Gateway& gw,
                      const gateway::ModelSpec& model,
                      const groundtruth::BehaviorTaxonomy& taxonomy,
                      const Task3Options& options) {
  Task3Result result;
  result.payload = representation::truncate_to_budget(ranked, model, options.overhead_tokens);

  std::string metadata_block;
  if (options.with_metadata) {
    json meta;
    meta["package_name"] = bundle.manifest.package_name;
    meta["version"] = bundle.manifest.version;
    json components = json::array();
    for (const auto& comp : bundle.manifest.components) {
      components.push_back(json{{"class_name", comp.class_name}, {"kind", comp.kind}});
    }
    meta["components"] = components;
    meta["certificate"] = {{"fingerprint", bundle.manifest.certificate.fingerprint},
                           {"issuer", bundle.manifest.certificate.issuer},
                           {"subject", bundle.manifest.certificate.subject}};
    metadata_block = "Application metadata:\n" + meta.dump(2) + "\n";
  }

  std::string categories;
  for (std::size_t i = 0; i < taxonomy.canonical.size(); ++i) {
    if (i > 0) categories += ", ";
    categories += taxonomy.canonical[i];
  }

  result.prompt =
      std::string(kTask3PromptMarker) +
      "\nAnalyze the intent of this suspicious application from its ranked sensitive "
      "function summaries. If the evidence confirms malicious intent, report the behaviors "
      "(categories: " +
      categories +
      "); otherwise refute the suspicion.\n"
      "Reply with a JSON object: for benign {\"is_malicious\": false, \"present_behaviors\": "
      "[], \"summary\": \"...\"}; for malicious {\"is_malicious\": true, "
      "\"present_behaviors\": [{\"behavior\": \"...\", \"confidence\": \"...\", \"evidence\": "
      "\"...\", \"related_functions\": [\"...\"]}], \"summary\": \"...\", \"category\": "
      "\"...\"}.\n"
      "Sample: " +
      bundle.label.sample_id + "\n" + metadata_block + "Ranked function representations:\n" +
      result.payload.rendered;

  try {
    const json reply = gw.complete_structured(model, result.prompt, "behavior_report");
    result.report =
        groundtruth::report_from_json(reply, bundle.label.sample_id, model.spec_hash());
  } catch (const Error& error) {
    if (error.kind() != ErrorKind::UnparseableReply) {
      throw;
    }
    result.failed = true;
    result.failure = error.what();
  }
  return result;
}

// ---------------------------------------------------------------------------
// Task 4

DiscriminationResult discrimination(const std::vector<SampleVerdict>& verdicts) {
  DiscriminationResult result;
  // classes observed in truth or prediction over malware samples
  std::set<std::string> classes;
  for (const auto& verdict : verdicts) {
    if (verdict.is_malware) {
      ++result.malware_total;
      if (verdict.predicted_malicious) {
        ++result.malware_kept;
        if (!verdict.predicted_category.empty()) {
          classes.insert(verdict.predicted_category);
        }
      }
      classes.insert(verdict.true_category);
    } else {
      ++result.benign_total;
      if (!verdict.predicted_malicious) {
        ++result.benign_refuted;
      }
    }
  }
  result.fpcr = result.benign_total == 0
                    ? 0.0
                    : 100.0 * static_cast<double>(result.benign_refuted) /
                          static_cast<double>(result.benign_total);
  result.tpmr = result.malware_total == 0
                    ? 0.0
                    : 100.0 * static_cast<double>(result.malware_kept) /
                          static_cast<double>(result.malware_total);

  // macro F1 over malware category classification; a malware sample predicted
  // benign contributes a false negative to its true class and no predicted
  // class at all.
  double f1_sum = 0.0;
  for (const auto& cls : classes) {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (const auto& verdict : verdicts) {
      if (!verdict.is_malware) {
        continue;
      }
      const bool truth = verdict.true_category == cls;
      const bool predicted =
          verdict.predicted_malicious && verdict.predicted_category == cls;
      if (truth && predicted) ++tp;
      if (!truth && predicted) ++fp;
      if (truth && !predicted) ++fn;
    }
    const double precision =
        tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall =
        tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double f1 =
        precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
    f1_sum += f1;
  }
  result.f1c = classes.empty() ? 0.0 : 100.0 * f1_sum / static_cast<double>(classes.size());
  return result;
}

DiscriminationResult discrimination(
    const std::vector<codebase::SampleLabel>& labels,
    const std::map<std::string, const groundtruth::GeneratedReport*>& reports) {
  std::vector<SampleVerdict> verdicts;
  for (const auto& label : labels) {
    auto it = reports.find(label.sample_id);
    if (it == reports.end() || it->second == nullptr) {
      raise(ErrorKind::MissingReport, "sample '" + label.sample_id + "' has no report");
    }
    SampleVerdict verdict;
    verdict.sample_id = label.sample_id;
    verdict.is_malware = label.is_malware();
    verdict.true_category = label.category;
    verdict.predicted_malicious = it->second->is_malicious;
    verdict.predicted_category = it->second->category;
    verdicts.push_back(std::move(verdict));
  }
  return discrimination(verdicts);
}

// ---------------------------------------------------------------------------
// Composites

Composites composites(const std::vector<AaRow>& malware_rows,
                      const DiscriminationResult& disc, const MetricWeights& weights) {
  weights.validate();
  Composites result;
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& row : malware_rows) {
    if (row.indicator && !row.judged) {
      ++result.excluded;  // cannot form the product; reported, not imputed
      continue;
    }
    if (row.indicator) {
      for (double value : {row.rq, row.eas, row.sas}) {
        if (value < 0.0 || value > 100.0) {
          raise(ErrorKind::ScaleMismatch, "judge scores must be on the 0-100 scale");
        }
      }
      sum += (row.rq / 100.0) * (row.eas / 100.0) * (row.sas / 100.0);
    }
    ++counted;
  }
  result.aa = counted == 0 ? 0.0 : 100.0 * sum / static_cast<double>(counted);
  result.ds = (disc.fpcr + disc.tpmr + disc.f1c) / 3.0;
  result.wrs = weights.w_aa * result.aa + weights.w_ds * result.ds;
  return result;
}

MetricBundle aggregate_metrics(std::vector<PerSampleMetrics> rows,
                               const DiscriminationResult& disc, const MetricWeights& weights,
                               bool context_free, bool with_metadata) {
  std::sort(rows.begin(), rows.end(), [](const PerSampleMetrics& a, const PerSampleMetrics& b) {
    return a.sample_id < b.sample_id;
  });

  MetricBundle bundle;
  bundle.disc = disc;
  bundle.context_free = context_free;
  bundle.with_metadata = with_metadata;

  double fs_sum = 0.0, csr_sum = 0.0, rq_sum = 0.0, eas_sum = 0.0, sas_sum = 0.0;
  std::size_t fs_n = 0, csr_n = 0, rq_n = 0, eas_n = 0, sas_n = 0;
  std::vector<AaRow> aa_rows;
  for (const auto& row : rows) {
    const bool malware = row.split != codebase::kSplitBenign;
    if (row.fs) {
      fs_sum += *row.fs;
      ++fs_n;
    }
    if (row.csr) {
      csr_sum += *row.csr;
      ++csr_n;
    } else {
      ++bundle.exclusions.csr_undefined;
    }
    if (row.task3_failed) {
      ++bundle.exclusions.task3_failed;
    }
    if (malware) {
      if (row.rq) {
        rq_sum += *row.rq;
        ++rq_n;
      }
      if (row.eas) {
        eas_sum += *row.eas;
        ++eas_n;
      } else if (row.has_report && row.predicted_malicious) {
        ++bundle.exclusions.eas_undefined;
      }
      if (row.sas) {
        sas_sum += *row.sas;
        ++sas_n;
      }
      if (row.has_report && row.predicted_malicious && !row.judged) {
        ++bundle.exclusions.unjudged;
      }
      if (row.has_report) {
        AaRow aa;
        aa.indicator = row.predicted_malicious;
        aa.judged = row.judged && row.rq.has_value() && row.eas.has_value() &&
                    row.sas.has_value();
        aa.rq = row.rq.value_or(0.0);
        aa.eas = row.eas.value_or(0.0);
        aa.sas = row.sas.value_or(0.0);
        aa_rows.push_back(aa);
      }
    }
  }
  bundle.fs_mean = fs_n == 0 ? 0.0 : fs_sum / static_cast<double>(fs_n);
  bundle.csr_mean = csr_n == 0 ? 0.0 : csr_sum / static_cast<double>(csr_n);
  bundle.rq_mean = rq_n == 0 ? 0.0 : rq_sum / static_cast<double>(rq_n);
  bundle.eas_mean = eas_n == 0 ? 0.0 : eas_sum / static_cast<double>(eas_n);
  bundle.sas_mean = sas_n == 0 ? 0.0 : sas_sum / static_cast<double>(sas_n);
  bundle.comp = composites(aa_rows, disc, weights);
  bundle.rows = std::move(rows);
  return bundle;
}

}  // namespace maleval::evaluation
