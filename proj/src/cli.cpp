#include "ubt/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "ubt/pipeline.hpp"

namespace ubt::cli {

namespace {

using namespace ubt::pipeline;

void add_normalize(CLI::App& app, NormalizeArgs& args) {
    CLI::App* sub = app.add_subcommand("normalize", "Parse disassembly listings into corpus files");
    sub->add_option("--listing", args.listings, "input listing file(s)")->required();
    sub->add_option("--arch", args.arch, "architecture (x86|arm)")->required();
    sub->add_option("--out-corpus", args.out_corpus, "output corpus file")->required();
    sub->add_option("--out-functions", args.out_functions, "output functions.tsv");
    sub->add_option("--seed", args.seed, "provenance seed");
}

struct StatsCliArgs {
    std::vector<std::string> listings, corpora, functions, archs, opts;
    std::string out_report;
};

void add_stats(CLI::App& app, StatsCliArgs& args) {
    CLI::App* sub = app.add_subcommand("stats", "Corpus statistics table");
    sub->add_option("--listing", args.listings, "listing file(s)");
    sub->add_option("--corpus", args.corpora, "corpus file(s)");
    sub->add_option("--functions", args.functions, "functions.tsv per corpus");
    sub->add_option("--arch", args.archs, "architecture per input")->required();
    sub->add_option("--opt", args.opts, "optimization level per input");
    sub->add_option("--out", args.out_report, "report file");
}

StatsArgs make_stats_args(const StatsCliArgs& c) {
    StatsArgs args;
    const std::size_t n = c.listings.size() + c.corpora.size();
    if (n == 0) throw ConfigError("stats: provide --listing or --corpus inputs");
    auto pick = [&](const std::vector<std::string>& v, std::size_t i,
                    const std::string& fallback) {
        if (v.empty()) return fallback;
        if (v.size() == 1) return v[0];
        if (i < v.size()) return v[i];
        throw ConfigError("stats: per-input option count mismatch");
    };
    std::size_t idx = 0;
    for (const std::string& l : c.listings) {
        StatsInput in;
        in.listing = l;
        in.arch = pick(c.archs, idx, "");
        in.opt_level = pick(c.opts, idx, "O0");
        args.inputs.push_back(in);
        ++idx;
    }
    for (std::size_t k = 0; k < c.corpora.size(); ++k) {
        StatsInput in;
        in.corpus = c.corpora[k];
        if (k < c.functions.size()) in.functions = c.functions[k];
        in.arch = pick(c.archs, idx, "");
        in.opt_level = pick(c.opts, idx, "O0");
        args.inputs.push_back(in);
        ++idx;
    }
    args.out_report = c.out_report;
    return args;
}

struct EmbedCliArgs {
    TrainEmbedArgs args;
    std::string mode = "subword";
};

void add_train_embed(CLI::App& app, EmbedCliArgs& c) {
    CLI::App* sub = app.add_subcommand("train-embed", "Train instruction embeddings (MAIE)");
    sub->add_option("--corpus", c.args.corpus, "corpus file")->required();
    sub->add_option("--out-prefix", c.args.out_prefix, "artifact prefix")->required();
    sub->add_option("--dim", c.args.cfg.dim, "embedding dimension");
    sub->add_option("--window", c.args.cfg.window, "context window");
    sub->add_option("--negatives", c.args.cfg.negatives, "negatives per positive");
    sub->add_option("--epochs", c.args.cfg.epochs, "training epochs");
    sub->add_option("--lr", c.args.cfg.learning_rate, "initial learning rate");
    sub->add_option("--seed", c.args.cfg.seed, "rng seed");
    sub->add_option("--mode", c.mode, "subword|word");
    sub->add_option("--buckets", c.args.cfg.buckets, "subword hash buckets");
    sub->add_option("--min-count", c.args.min_count, "vocabulary count threshold");
}

struct MapCliArgs {
    MapArgs args;
    std::string init = "sorted-sim";
};

void add_map(CLI::App& app, MapCliArgs& c) {
    CLI::App* sub = app.add_subcommand("map", "Map MAIE into a shared space (CAIE)");
    sub->add_option("--src-prefix", c.args.src_prefix, "low-resource embedding prefix")->required();
    sub->add_option("--tgt-prefix", c.args.tgt_prefix, "high-resource embedding prefix")->required();
    sub->add_option("--out-dir", c.args.out_dir, "output directory")->required();
    sub->add_option("--src-arch", c.args.src_arch, "source arch tag");
    sub->add_option("--tgt-arch", c.args.tgt_arch, "target arch tag");
    sub->add_option("--csls-k", c.args.cfg.csls_k, "CSLS neighborhood size");
    sub->add_option("--keep-prob", c.args.cfg.keep_prob, "stochastic keep probability");
    sub->add_option("--max-iterations", c.args.cfg.max_iterations, "self-learning cap");
    sub->add_option("--tolerance", c.args.cfg.tolerance, "objective tolerance");
    sub->add_option("--vocab-limit", c.args.cfg.vocab_limit, "induction vocabulary limit");
    sub->add_option("--patience", c.args.cfg.patience, "non-improving iterations tolerated");
    sub->add_option("--init", c.init, "sorted-sim|rank initialization");
    sub->add_option("--seed", c.args.cfg.seed, "rng seed");
}

void add_train_xlate(CLI::App& app, TrainXlateArgs& args) {
    CLI::App* sub = app.add_subcommand("train-xlate", "Train the basic-block translator");
    sub->add_option("--corpus-a", args.corpus_a)->required();
    sub->add_option("--corpus-b", args.corpus_b)->required();
    sub->add_option("--vocab-a", args.vocab_a)->required();
    sub->add_option("--vocab-b", args.vocab_b)->required();
    sub->add_option("--caie-a", args.caie_a)->required();
    sub->add_option("--caie-b", args.caie_b)->required();
    sub->add_option("--out-model", args.out_model)->required();
    sub->add_option("--arch-a", args.arch_a);
    sub->add_option("--arch-b", args.arch_b);
    sub->add_option("--iterations", args.schedule.iterations);
    sub->add_option("--batch-size", args.schedule.batch_size);
    sub->add_option("--lr", args.schedule.learning_rate);
    sub->add_option("--clip-norm", args.schedule.clip_norm);
    sub->add_option("--max-block-len", args.schedule.max_block_len);
    sub->add_option("--hidden-enc", args.schedule.hidden_enc);
    sub->add_option("--hidden-dec", args.schedule.hidden_dec);
    sub->add_option("--seed", args.schedule.seed);
}

void add_translate(CLI::App& app, TranslateArgs& args) {
    CLI::App* sub = app.add_subcommand("translate", "Translate basic blocks across sides");
    sub->add_option("--model", args.model)->required();
    sub->add_option("--input", args.input)->required();
    sub->add_option("--from", args.from)->required();
    sub->add_option("--out", args.out)->required();
    sub->add_option("--beam", args.beam_width);
    sub->add_option("--src-embed-prefix", args.src_embed_prefix,
                    "enables subword OOV substitution");
}

void add_bleu(CLI::App& app, BleuArgs& args) {
    CLI::App* sub = app.add_subcommand("bleu", "Function-level BLEU of translations");
    sub->add_option("--model", args.model)->required();
    sub->add_option("--corpus", args.corpus_src)->required();
    sub->add_option("--functions", args.functions_src)->required();
    sub->add_option("--from", args.from);
    sub->add_option("--oracle", args.oracle_lexicon, "ground-truth lexicon (evaluation only)")
        ->required();
    sub->add_option("--report", args.out_report);
    sub->add_option("--beam", args.beam_width);
}

void add_funcsim(CLI::App& app, FuncsimArgs& args) {
    CLI::App* sub = app.add_subcommand("funcsim", "Cross-architecture function similarity");
    sub->add_option("--model", args.model)->required();
    sub->add_option("--caie-a", args.caie_a)->required();
    sub->add_option("--embed-prefix-a", args.embed_prefix_a)->required();
    sub->add_option("--corpus-a", args.corpus_a)->required();
    sub->add_option("--functions-a", args.functions_a)->required();
    sub->add_option("--corpus-b", args.corpus_b)->required();
    sub->add_option("--functions-b", args.functions_b)->required();
    sub->add_option("--embed-prefix-b", args.embed_prefix_b);
    sub->add_option("--report", args.out_report);
    sub->add_option("--seed", args.seed);
    sub->add_option("--val-fraction", args.validation_fraction);
    sub->add_option("--beam", args.beam_width);
}

struct VulnTrainCliArgs {
    VulnTrainArgs args;
    std::string method = "smote";
};

void add_vuln_train(CLI::App& app, VulnTrainCliArgs& c) {
    CLI::App* sub = app.add_subcommand("vuln-train", "Train the vulnerability classifier");
    sub->add_option("--dataset", c.args.dataset)->required();
    sub->add_option("--out-model", c.args.out_model)->required();
    sub->add_option("--method", c.method, "ros|smote");
    sub->add_option("--k-neighbors", c.args.oversample.k_neighbors);
    sub->add_option("--sampling-ratio", c.args.oversample.sampling_ratio);
    sub->add_option("--duplicate", c.args.oversample.duplicate_copies);
    sub->add_option("--oversample-seed", c.args.oversample.seed);
    sub->add_option("--lambda", c.args.lambda);
    sub->add_option("--epochs", c.args.epochs);
    sub->add_option("--seed", c.args.seed);
}

void add_vuln_scan(CLI::App& app, VulnScanArgs& args) {
    CLI::App* sub = app.add_subcommand("vuln-scan", "Scan translated functions with a trained SVM");
    sub->add_option("--svm", args.svm_model)->required();
    sub->add_option("--model", args.xlate_model)->required();
    sub->add_option("--caie-a", args.caie_a)->required();
    sub->add_option("--embed-prefix-a", args.embed_prefix_a)->required();
    sub->add_option("--corpus-b", args.corpus_b)->required();
    sub->add_option("--functions-b", args.functions_b)->required();
    sub->add_option("--labels-b", args.labels_b)->required();
    sub->add_option("--embed-prefix-b", args.embed_prefix_b);
    sub->add_option("--from", args.from);
    sub->add_option("--report", args.out_report);
    sub->add_option("--beam", args.beam_width);
}

void add_toygen(CLI::App& app, ToygenArgs& args) {
    CLI::App* sub = app.add_subcommand("toygen", "Generate twin-ISA toy corpora");
    sub->add_option("--out-dir", args.out_dir)->required();
    sub->add_option("--vocab", args.spec.vocab_size);
    sub->add_option("--blocks", args.spec.corpus_blocks);
    sub->add_option("--zipf", args.spec.zipf_exponent);
    sub->add_option("--len-min", args.spec.block_len_min);
    sub->add_option("--len-max", args.spec.block_len_max);
    sub->add_option("--swap-prob", args.spec.swap_prob);
    sub->add_option("--fn-blocks-min", args.spec.fn_blocks_min);
    sub->add_option("--fn-blocks-max", args.spec.fn_blocks_max);
    sub->add_option("--seed", args.spec.seed);
}

struct E2eCliArgs {
    E2eArgs args;
    std::string mode = "subword";
};

void add_e2e(CLI::App& app, E2eCliArgs& c) {
    CLI::App* sub = app.add_subcommand("e2e-demo", "Full pipeline on toy twin corpora");
    sub->add_option("--out-dir", c.args.out_dir)->required();
    sub->add_option("--seed", c.args.seed);
    sub->add_option("--vocab", c.args.spec.vocab_size);
    sub->add_option("--blocks", c.args.spec.corpus_blocks);
    sub->add_option("--swap-prob", c.args.spec.swap_prob);
    sub->add_option("--embed-dim", c.args.embed_dim);
    sub->add_option("--embed-epochs", c.args.embed_epochs);
    sub->add_option("--mode", c.mode, "subword|word");
    sub->add_option("--xlate-iterations", c.args.xlate_iterations);
    sub->add_option("--xlate-lr", c.args.xlate_lr);
    sub->add_option("--hidden-enc", c.args.hidden_enc);
    sub->add_option("--hidden-dec", c.args.hidden_dec);
}

}  // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"unsupervised binary-code translation toolkit"};
    app.set_config("--config", "", "key = value config file with [subcommand] sections");
    app.require_subcommand(0, 1);

    NormalizeArgs normalize_args;
    StatsCliArgs stats_args;
    EmbedCliArgs embed_args;
    MapCliArgs map_args;
    TrainXlateArgs xlate_args;
    TranslateArgs translate_args;
    BleuArgs bleu_args;
    FuncsimArgs funcsim_args;
    VulnTrainCliArgs vuln_train_args;
    VulnScanArgs vuln_scan_args;
    ToygenArgs toygen_args;
    E2eCliArgs e2e_args;

    add_normalize(app, normalize_args);
    add_stats(app, stats_args);
    add_train_embed(app, embed_args);
    add_map(app, map_args);
    add_train_xlate(app, xlate_args);
    add_translate(app, translate_args);
    add_bleu(app, bleu_args);
    add_funcsim(app, funcsim_args);
    add_vuln_train(app, vuln_train_args);
    add_vuln_scan(app, vuln_scan_args);
    add_toygen(app, toygen_args);
    add_e2e(app, e2e_args);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const CLI::FileError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    try {
        if (app.got_subcommand("normalize")) {
            cmd_normalize(normalize_args);
        } else if (app.got_subcommand("stats")) {
            std::cout << cmd_stats(make_stats_args(stats_args));
        } else if (app.got_subcommand("train-embed")) {
            embed_args.args.cfg.mode = embed::mode_from_string(embed_args.mode);
            cmd_train_embed(embed_args.args);
        } else if (app.got_subcommand("map")) {
            const std::string init = to_upper(map_args.init);
            if (init == "RANK" || init == "FREQUENCY-RANK")
                map_args.args.cfg.init = xmap::InitMode::FrequencyRank;
            else if (init != "SORTED-SIM" && init != "SORTED-SIMILARITY")
                throw ConfigError("map: unknown --init value: " + map_args.init);
            cmd_map(map_args.args);
        } else if (app.got_subcommand("train-xlate")) {
            cmd_train_xlate(xlate_args);
        } else if (app.got_subcommand("translate")) {
            cmd_translate(translate_args);
        } else if (app.got_subcommand("bleu")) {
            const BleuResult r = cmd_bleu(bleu_args);
            std::cout << "mean function BLEU: " << format_double(r.mean_function_bleu, 6) << "\n";
        } else if (app.got_subcommand("funcsim")) {
            const FuncsimResult r = cmd_funcsim(funcsim_args);
            std::cout << "accuracy: " << format_double(r.accuracy * 100.0, 4) << "%\n";
        } else if (app.got_subcommand("vuln-train")) {
            vuln_train_args.args.oversample.method =
                to_upper(vuln_train_args.method) == "ROS"
                    ? vulndetect::OversampleConfig::Method::Ros
                    : vulndetect::OversampleConfig::Method::Smote;
            cmd_vuln_train(vuln_train_args.args);
        } else if (app.got_subcommand("vuln-scan")) {
            const VulnScanResult r = cmd_vuln_scan(vuln_scan_args);
            std::cout << vulndetect::format_metrics(r.metrics) << "\n";
        } else if (app.got_subcommand("toygen")) {
            cmd_toygen(toygen_args);
        } else if (app.got_subcommand("e2e-demo")) {
            e2e_args.args.embed_mode = embed::mode_from_string(e2e_args.mode);
            const E2eResult r = cmd_e2e_demo(e2e_args.args);
            std::cout << "token accuracy: " << format_double(r.token_accuracy, 4) << "\n"
                      << "mean function BLEU: " << format_double(r.mean_function_bleu, 4) << "\n"
                      << "funcsim accuracy: " << format_double(r.funcsim_accuracy, 4) << "\n"
                      << "vuln: " << vulndetect::format_metrics(r.vuln) << "\n";
        } else {
            std::cerr << app.help() << "\n";
            return 2;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 3;
    } catch (const DataFormatError& e) {
        std::cerr << "data format error: " << e.what() << "\n";
        return 4;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 5;
    }
    return 0;
}

}  // namespace ubt::cli
