// pecs: run the learning service and administer its store.
//
//   pecs serve --port 8080 --store pecs_store.json [--assets DIR]
//   pecs ingest deck.json [--deck-id ID]
//   pecs export ID
//   pecs report --learner ID
//   pecs reset-phase --learner ID --phase N --therapist ID
//
// The store path comes from --store, then $PECS_STORE, then ./pecs_store.json.

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "pecs/error.hpp"
#include "pecs/json_codec.hpp"
#include "pecs/service.hpp"
#include "pecs/store.hpp"

namespace {

std::string resolve_store(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("PECS_STORE"); env && *env) return env;
  return "pecs_store.json";
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

httplib::Server* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PECS learning service and store administration"};
  app.require_subcommand(1);

  std::string store_flag;

  auto* serve = app.add_subcommand("serve", "Run the HTTP/JSON service");
  int port = 8080;
  std::string host = "0.0.0.0";
  std::string assets;
  serve->add_option("--port", port, "Listen port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--assets", assets, "Directory served under /assets/")->check(CLI::ExistingDirectory);
  serve->add_option("--store", store_flag, "Store snapshot path");

  auto* ingest = app.add_subcommand("ingest", "Validate a deck document and add it to the store");
  std::string deck_file;
  std::string deck_id;
  ingest->add_option("deck-file", deck_file, "Deck interchange document")->required()->check(CLI::ExistingFile);
  ingest->add_option("--deck-id", deck_id, "Deck id (default: file name without extension)");
  ingest->add_option("--store", store_flag, "Store snapshot path");

  auto* export_cmd = app.add_subcommand("export", "Print a stored deck in canonical form");
  std::string export_id;
  export_cmd->add_option("deck-id", export_id, "Deck id")->required();
  export_cmd->add_option("--store", store_flag, "Store snapshot path");

  auto* report = app.add_subcommand("report", "Print a learner's progress report");
  std::string learner;
  report->add_option("--learner", learner, "Learner id")->required();
  report->add_option("--store", store_flag, "Store snapshot path");

  auto* reset = app.add_subcommand("reset-phase", "Move a learner back to an earlier phase");
  int phase = 1;
  std::string therapist;
  reset->add_option("--learner", learner, "Learner id")->required();
  reset->add_option("--phase", phase, "Target phase")->required()->check(CLI::Range(1, 4));
  reset->add_option("--therapist", therapist, "Linked THERAPIST account making the reset")->required();
  reset->add_option("--store", store_flag, "Store snapshot path");

  CLI11_PARSE(app, argc, argv);

  try {
    pecs::Store store(resolve_store(store_flag));

    if (*serve) {
      pecs::Service service(store);
      auto server = pecs::make_http_server(service, assets);
      g_server = server.get();
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "pecs: serving " << store.path() << " on " << host << ":" << port << "\n";
      if (!server->listen(host, port)) {
        std::cerr << "pecs: cannot listen on " << host << ":" << port << "\n";
        return 1;
      }
      store.flush();
      return 0;
    }

    if (*ingest) {
      const pecs::Deck deck = pecs::load_deck(read_text(deck_file));
      const std::string id =
          deck_id.empty() ? std::filesystem::path(deck_file).stem().string() : deck_id;
      store.put_deck(id, deck);
      std::cout << "ingested deck '" << id << "' (" << deck.size() << " cards)\n";
      return 0;
    }

    if (*export_cmd) {
      std::cout << pecs::export_deck(store.deck(export_id));
      return 0;
    }

    if (*report) {
      std::cout << pecs::codec::report_to_json(store.progress(learner)).dump(2) << "\n";
      return 0;
    }

    if (*reset) {
      const pecs::LearnerProfile adult = store.profile(therapist);
      if (adult.account_role != pecs::AccountRole::Therapist || !adult.linked.contains(learner)) {
        std::cerr << "pecs: " << therapist << " is not a THERAPIST linked to " << learner << "\n";
        return 2;
      }
      const pecs::LearnerProfile p = store.reset_phase(learner, phase);
      std::cout << "learner " << p.learner_id << " is now in phase " << p.current_phase << "\n";
      return 0;
    }
  } catch (const pecs::Error& e) {
    std::cerr << "pecs: " << pecs::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "pecs: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
