// Copyright 2026 The headgen Authors
// SPDX-License-Identifier: Apache-2.0

#include "headgen/synth.hpp"

#include <array>
#include <cstdio>
#include <random>

#include "headgen/common.hpp"

namespace headgen {
namespace {

constexpr std::array kFirstNames = {
    "Aino", "Eero", "Helmi", "Juha", "Kaisa", "Lauri", "Maija", "Niko", "Oona", "Pekka",
    "Riikka", "Sami", "Tuula", "Ville", "Anna", "Mikko", "Laura", "Jari", "Sanna", "Timo",
    "Elina", "Antti", "Hanna", "Matti", "Noora", "Olli", "Pirjo", "Risto", "Satu", "Tapio"};

constexpr std::array kSurnames = {
    "Virtanen", "Korhonen", "Nieminen", "Makinen", "Hamalainen", "Laine", "Heikkinen",
    "Koskinen", "Jarvinen", "Lehtonen", "Lehtinen", "Saarinen", "Salminen", "Heinonen",
    "Niemi", "Heikkila", "Kinnunen", "Salonen", "Turunen", "Salo", "Laitinen", "Tuominen",
    "Rantanen", "Karjalainen", "Jokinen", "Mattila", "Savolainen", "Lahtinen", "Ahonen",
    "Leinonen", "Kallio", "Hiltunen", "Miettinen", "Aaltonen", "Pitkanen", "Manninen",
    "Hakala", "Lindholm", "Koivisto", "Anttila", "Vainio", "Laaksonen", "Rasanen",
    "Seppanen", "Kettunen", "Hakkarainen", "Ojala", "Mustonen", "Toivonen", "Honkanen",
    "Peltonen", "Kauppinen", "Moilanen", "Nurmi", "Huttunen", "Blomqvist", "Lindqvist",
    "Forsman", "Sundberg", "Holmberg", "Eklund", "Lundgren", "Strom", "Wikstrom",
    "Berg", "Palmu", "Rautio", "Kivela", "Harju", "Kuusisto", "Vuorinen", "Lampinen",
    "Hyvonen", "Karppinen", "Sirola", "Tikkanen", "Kokkonen", "Ranta", "Suominen",
    "Lappalainen", "Partanen", "Keskinen", "Valtonen", "Hirvonen", "Markkanen", "Hannula",
    "Juvonen", "Soini", "Aalto", "Kulmala"};

constexpr std::array kTowns = {
    "Oulu", "Turku", "Tampere", "Lahti", "Kuopio", "Pori", "Joensuu", "Vaasa",
    "Kotka", "Mikkeli", "Hamina", "Raahe", "Kajaani", "Rauma", "Hanko", "Espoo"};

constexpr std::array kRoles = {
    "the mayor", "the coach", "the council chair", "the head teacher", "the fire chief",
    "the harbour master", "the museum director", "the police chief"};

struct Action {
  const char* past;     // body: "<Name> approved the new budget"
  const char* present;  // headline: "<Surname> approves new budget"
  const char* thing;
  const char* outlook;
};

constexpr std::array kActions = {
    Action{"approved", "approves", "the new budget", "cover the next two years"},
    Action{"opened", "opens", "the renovated library", "serve readers from Monday"},
    Action{"rejected", "rejects", "the bridge plan", "return to the table in spring"},
    Action{"announced", "announces", "a summer festival", "bring thousands of visitors"},
    Action{"closed", "closes", "the old school", "be demolished next year"},
    Action{"defended", "defends", "the parking fees", "stay in place for now"},
    Action{"praised", "praises", "the volunteer crews", "receive a small award"},
    Action{"criticised", "criticises", "the ferry schedule", "be reviewed in May"},
    Action{"signed", "signs", "the harbour deal", "create forty jobs"},
    Action{"postponed", "postpones", "the concert series", "move to the autumn"}};

constexpr std::array kDays = {"Monday", "Tuesday", "Wednesday", "Thursday", "Friday",
                              "Saturday", "Sunday"};

constexpr std::array kFillers = {
    "Residents gathered outside the town hall to follow the meeting.",
    "Local businesses have followed the matter closely.",
    "The decision follows months of debate in the council.",
    "Several residents wrote to the local newspaper about the issue.",
    "Officials expect the matter to draw further attention.",
    "The opposition asked for more time to study the details."};

constexpr std::array kBrands = {"north", "south", "east"};

template <typename A>
const auto& Pick(const A& items, std::mt19937_64& rng) {
  return items[UniformBelow(rng, items.size())];
}

}  // namespace

std::vector<SyntheticArticle> SyntheticCorpus(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SyntheticArticle> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::string first = Pick(kFirstNames, rng);
    const std::string last = Pick(kSurnames, rng);
    const std::string town = Pick(kTowns, rng);
    const std::string role = Pick(kRoles, rng);
    const Action& act = Pick(kActions, rng);
    const std::string day = Pick(kDays, rng);
    const std::string filler = Pick(kFillers, rng);

    std::string body = first + " " + last + ", " + role + " of " + town + ", " + act.past +
                       " " + act.thing + " on " + day + ". " + last + " said that it would " +
                       act.outlook + ". " + filler;
    std::string thing = act.thing;
    if (thing.rfind("the ", 0) == 0) thing = thing.substr(4);
    std::string title;
    switch (UniformBelow(rng, 3)) {
      case 0: title = last + " " + act.present + " " + thing; break;
      case 1: title = town + ": " + last + " " + act.present + " " + thing; break;
      default: title = last + " " + act.present + " " + thing + " in " + town; break;
    }

    char id[32];
    std::snprintf(id, sizeof id, "synth-%04zu", i);
    SyntheticArticle a;
    a.record.id = id;
    a.record.title = std::move(title);
    a.record.body = std::move(body);
    a.record.brand = kBrands[i % kBrands.size()];
    a.entity = last;
    out.push_back(std::move(a));
  }
  return out;
}

}  // namespace headgen
