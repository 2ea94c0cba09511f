// Copyright 2026 storymine authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//
// Counts label distributions over the bundled sample corpus and tests one
// pair of dimensions for association, writing charts next to the terminal
// summary.

#include <cstdio>
#include <string>
#include <vector>

#include "storymine/stats.hpp"
#include "storymine/text.hpp"

using namespace storymine;

int main(int argc, char** argv) {
  const std::string data = argc > 1 ? argv[1] : std::string("data/sample");
  const std::string out_dir = argc > 2 ? argv[2] : std::string("pattern_out");
  Corpus corpus = load_corpus(data + "/corpus.jsonl", data + "/splits.txt");
  std::vector<const Story*> stories;
  for (const Story& s : corpus.stories) stories.push_back(&s);

  std::vector<Distribution> dists;
  for (const char* axis : {"time_of_day", "location_type", "groping"})
    dists.push_back(distribution(stories, parse_axis(axis)));
  for (const Distribution& d : dists) {
    std::printf("%s:\n", d.axis.c_str());
    for (size_t i = 0; i < d.labels.size(); ++i)
      std::printf("  %-16s %lld\n", d.labels[i].c_str(), d.counts[i]);
  }

  CrosstabAnalysis analysis;
  analysis.table = crosstab(stories, parse_axis("time_of_day"),
                            parse_axis("groping"));
  analysis.test = chi_square(analysis.table);
  std::printf(
      "\ntime_of_day x groping: chi2 %.3f, df %d, p %.4f (%ssignificant)\n",
      analysis.test.statistic, analysis.test.df, analysis.test.p_value,
      analysis.test.significant ? "" : "not ");
  for (const std::string& w : analysis.test.warnings)
    std::printf("  note: %s\n", w.c_str());

  for (const std::string& f : emit_report(dists, {analysis}, out_dir))
    std::printf("wrote %s/%s\n", out_dir.c_str(), f.c_str());
  return 0;
}
