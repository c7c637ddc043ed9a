#include "ubt/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ubt::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::MatrixXd special_embedding_rows(int d) {
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(corpus::kNumSpecials, d);
    for (std::int32_t id = 1; id < corpus::kNumSpecials; ++id) {  // <PAD> stays zero
        Rng rng(0xC0FFEEULL + static_cast<std::uint64_t>(id));
        for (int j = 0; j < d; ++j) rows(id, j) = rng.gaussian();
        rows.row(id) /= rows.row(id).norm();
    }
    return rows;
}

Eigen::MatrixXd preprocessed_real_rows(const embed::EmbeddingMatrix& maie,
                                       Eigen::RowVectorXd* mean_out) {
    const std::int32_t v = static_cast<std::int32_t>(maie.rows.rows());
    if (v <= corpus::kNumSpecials)
        throw DataFormatError("embedding has no real words to preprocess");
    std::vector<std::string> names;
    if (maie.vocab.size() == v)
        for (std::int32_t i = corpus::kNumSpecials; i < v; ++i) names.push_back(maie.vocab.word(i));
    const Eigen::MatrixXd real = maie.rows.bottomRows(v - corpus::kNumSpecials);
    return xmap::preprocess_embeddings(real, mean_out, names.empty() ? nullptr : &names);
}

embed::EmbeddingMatrix make_caie(const embed::EmbeddingMatrix& maie, const Eigen::MatrixXd* W) {
    Eigen::RowVectorXd mean;
    Eigen::MatrixXd real = preprocessed_real_rows(maie, &mean);
    if (W) real = xmap::map_embeddings(real, *W);
    embed::EmbeddingMatrix caie;
    caie.d = maie.d;
    caie.mode = maie.mode;
    caie.vocab = maie.vocab;
    caie.subword = maie.subword;
    caie.seed = maie.seed;
    caie.rows.resize(maie.rows.rows(), maie.d);
    caie.rows.topRows(corpus::kNumSpecials) = special_embedding_rows(maie.d);
    caie.rows.bottomRows(real.rows()) = real;
    embed::CaieTransform t;
    t.mean = mean;
    if (W) t.W = *W;
    caie.caie = std::move(t);
    return caie;
}

// ---- functions.tsv ----------------------------------------------------------

void write_functions_file(const std::string& path, const FunctionIndex& index,
                          const std::string& arch, const Provenance& prov) {
    std::ostringstream out;
    out << prov.line();
    for (std::size_t i = 0; i < index.ids.size(); ++i) {
        out << index.ids[i] << '\t' << arch << '\t';
        const auto& blocks = index.blocks[i];
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            if (k > 0) out << ',';
            out << blocks[k];
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

FunctionIndex read_functions_file(const std::string& path) {
    FunctionIndex index;
    for (const std::string& line : content_lines(read_text_file(path))) {
        if (trim(line).empty()) continue;
        const auto cols = split_on(line, '\t');
        if (cols.size() != 3)
            throw DataFormatError("functions file: expected 3 tab-separated columns: " + line);
        index.ids.push_back(trim(cols[0]));
        std::vector<int> blocks;
        for (const std::string& tok : split_on(cols[2], ','))
            if (!trim(tok).empty()) blocks.push_back(std::stoi(trim(tok)));
        if (blocks.empty()) throw DataFormatError("functions file: function without blocks: " + line);
        index.blocks.push_back(std::move(blocks));
    }
    return index;
}

std::vector<std::vector<std::string>> gather_function_blocks(
    const std::vector<std::vector<std::string>>& corpus, const std::vector<int>& block_ids) {
    std::vector<std::vector<std::string>> out;
    out.reserve(block_ids.size());
    for (int id : block_ids) {
        if (id < 0 || static_cast<std::size_t>(id) >= corpus.size())
            throw DataFormatError("functions file: block index out of range: " + std::to_string(id));
        out.push_back(corpus[static_cast<std::size_t>(id)]);
    }
    return out;
}

// ---- labels ------------------------------------------------------------------

void write_labels_file(const std::string& path, const std::vector<std::string>& fids,
                       const std::vector<int>& labels, const Provenance& prov) {
    if (fids.size() != labels.size()) throw DataFormatError("labels: id/label count mismatch");
    std::ostringstream out;
    out << prov.line();
    for (std::size_t i = 0; i < fids.size(); ++i) out << fids[i] << ' ' << labels[i] << '\n';
    write_text_file(path, out.str());
}

std::vector<std::pair<std::string, int>> read_labels_file(const std::string& path) {
    std::vector<std::pair<std::string, int>> out;
    for (const std::string& line : content_lines(read_text_file(path))) {
        if (trim(line).empty()) continue;
        const auto toks = split_ws(line);
        if (toks.size() != 2) throw DataFormatError("labels file: expected 'fid label': " + line);
        out.emplace_back(toks[0], std::stoi(toks[1]));
    }
    return out;
}

std::uint64_t file_hash(const std::string& path) {
    const std::string data = read_text_file(path);
    return fnv1a64(data);
}

// ---- normalize / stats -------------------------------------------------------

void cmd_normalize(const NormalizeArgs& args) {
    if (args.listings.empty()) throw ConfigError("normalize: no input listings");
    const asmtext::Arch arch = asmtext::arch_from_string(args.arch);
    std::vector<std::vector<std::string>> blocks;
    FunctionIndex index;
    for (const std::string& path : args.listings) {
        const auto functions = asmtext::parse_listing(read_text_file(path), arch);
        for (const auto& fn : functions) {
            std::vector<int> ids;
            for (const auto& block : fn.blocks) {
                ids.push_back(static_cast<int>(blocks.size()));
                blocks.push_back(asmtext::block_words(block));
            }
            index.ids.push_back(fn.name);
            index.blocks.push_back(std::move(ids));
        }
    }
    Provenance prov{args.seed, fnv1a64("normalize:" + args.arch)};
    corpus::write_corpus_file(args.out_corpus, blocks, prov);
    if (!args.out_functions.empty())
        write_functions_file(args.out_functions, index, asmtext::arch_name(arch), prov);
}

std::string cmd_stats(const StatsArgs& args) {
    std::vector<corpus::StatsRow> rows;
    for (const StatsInput& in : args.inputs) {
        corpus::CorpusStats stats;
        if (!in.listing.empty()) {
            const auto functions =
                asmtext::parse_listing(read_text_file(in.listing), asmtext::arch_from_string(in.arch));
            stats = corpus::corpus_stats(functions);
        } else if (!in.corpus.empty()) {
            const auto blocks = corpus::read_corpus_file(in.corpus);
            std::int64_t fn_count = 0;
            if (!in.functions.empty())
                fn_count = static_cast<std::int64_t>(read_functions_file(in.functions).ids.size());
            stats = corpus::block_stats(blocks, fn_count);
        } else {
            throw ConfigError("stats: each input needs a listing or a corpus file");
        }
        rows.push_back({in.opt_level, in.arch, stats});
    }
    const std::string table = corpus::format_stats_table(rows);
    if (!args.out_report.empty()) {
        Provenance prov{0, fnv1a64("stats")};
        write_text_file(args.out_report, prov.line() + table);
    }
    return table;
}

// ---- embeddings ---------------------------------------------------------------

namespace {

std::uint64_t embed_config_hash(const embed::TrainConfig& cfg) {
    std::ostringstream s;
    s << "train-embed d=" << cfg.dim << " w=" << cfg.window << " neg=" << cfg.negatives
      << " ep=" << cfg.epochs << " lr=" << cfg.learning_rate << " mode=" << embed::mode_name(cfg.mode)
      << " buckets=" << cfg.buckets << " n=" << cfg.n_min << ".." << cfg.n_max;
    return fnv1a64(s.str());
}

}  // namespace

void cmd_train_embed(const TrainEmbedArgs& args) {
    const auto blocks = corpus::read_corpus_file(args.corpus);
    const corpus::Vocab vocab = corpus::build_vocab(blocks, args.min_count);
    const corpus::MonoCorpus mono =
        corpus::encode_corpus(blocks, vocab, asmtext::Arch::X86, corpus::OptLevel::O0);
    const embed::EmbeddingMatrix emb = embed::train_maie(mono, vocab, args.cfg);

    Provenance prov{args.cfg.seed, embed_config_hash(args.cfg)};
    corpus::write_vocab_file(args.out_prefix + ".vocab.txt", vocab, prov);
    embed::write_embedding_text(args.out_prefix + ".emb.txt", emb, prov);
    embed::write_embedding_binary(args.out_prefix + ".emb.bin", emb, prov);
    if (emb.subword) embed::write_subword_binary(args.out_prefix + ".sub.bin", *emb.subword, prov);

    json meta;
    meta["mode"] = embed::mode_name(emb.mode);
    meta["dim"] = emb.d;
    meta["vocab_size"] = vocab.size();
    meta["epoch_loss"] = emb.epoch_loss;
    meta["seed"] = args.cfg.seed;
    meta["config"] = hash_hex(prov.config_hash);
    meta["deterministic"] = true;  // single-threaded trainer
    write_text_file(args.out_prefix + ".meta.json", meta.dump(2) + "\n");
}

embed::EmbeddingMatrix load_embedding(const std::string& prefix) {
    embed::EmbeddingMatrix emb = embed::read_embedding_binary(prefix + ".emb.bin");
    emb.vocab = corpus::read_vocab_file(prefix + ".vocab.txt");
    if (emb.vocab.size() != emb.rows.rows())
        throw DataFormatError("embedding/vocab size mismatch for prefix " + prefix);
    if (emb.mode == embed::Mode::Subword && fs::exists(prefix + ".sub.bin"))
        emb.subword = embed::read_subword_binary(prefix + ".sub.bin");
    return emb;
}

// ---- mapping -------------------------------------------------------------------

void cmd_map(const MapArgs& args) {
    embed::EmbeddingMatrix src = load_embedding(args.src_prefix);
    embed::EmbeddingMatrix tgt = load_embedding(args.tgt_prefix);
    if (src.d != tgt.d) throw DataFormatError("map: embedding dimensions differ");

    Eigen::RowVectorXd mean_src, mean_tgt;
    const Eigen::MatrixXd prep_src = preprocessed_real_rows(src, &mean_src);
    const Eigen::MatrixXd prep_tgt = preprocessed_real_rows(tgt, &mean_tgt);
    std::vector<double> trace;
    xmap::MappingTransform mapping = xmap::self_learn(prep_src, prep_tgt, args.cfg, &trace);
    mapping.source_arch = args.src_arch;
    mapping.target_arch = args.tgt_arch;

    fs::create_directories(args.out_dir);
    std::ostringstream cfgs;
    cfgs << "map k=" << args.cfg.csls_k << " keep=" << args.cfg.keep_prob
         << " maxit=" << args.cfg.max_iterations << " tol=" << args.cfg.tolerance
         << " limit=" << args.cfg.vocab_limit;
    Provenance prov{args.cfg.seed, fnv1a64(cfgs.str())};

    xmap::write_mapping_file(args.out_dir + "/mapping.txt", mapping.W, prov);
    embed::EmbeddingMatrix caie_src = make_caie(src, &mapping.W);
    embed::EmbeddingMatrix caie_tgt = make_caie(tgt, nullptr);
    embed::write_embedding_binary(args.out_dir + "/caie_src.bin", caie_src, prov);
    embed::write_embedding_binary(args.out_dir + "/caie_tgt.bin", caie_tgt, prov);
    embed::write_embedding_text(args.out_dir + "/caie_src.txt", caie_src, prov,
                                "caie source=" + args.src_arch + " target=" + args.tgt_arch);
    embed::write_embedding_text(args.out_dir + "/caie_tgt.txt", caie_tgt, prov,
                                "caie source=" + args.tgt_arch + " target=" + args.tgt_arch);

    json meta;
    meta["objective"] = mapping.objective;
    meta["iterations"] = mapping.iterations;
    meta["converged"] = mapping.converged;
    meta["orthogonality_error"] = xmap::orthogonality_error(mapping.W);
    meta["objective_trace"] = trace;
    meta["source"] = args.src_arch;
    meta["target"] = args.tgt_arch;
    meta["seed"] = args.cfg.seed;
    write_text_file(args.out_dir + "/map.meta.json", meta.dump(2) + "\n");
}

embed::EmbeddingMatrix load_caie(const std::string& caie_bin, const std::string& embed_prefix) {
    embed::EmbeddingMatrix caie = embed::read_embedding_binary(caie_bin);
    caie.vocab = corpus::read_vocab_file(embed_prefix + ".vocab.txt");
    if (caie.vocab.size() != caie.rows.rows())
        throw DataFormatError("caie/vocab size mismatch: " + caie_bin);
    if (caie.mode == embed::Mode::Subword && fs::exists(embed_prefix + ".sub.bin"))
        caie.subword = embed::read_subword_binary(embed_prefix + ".sub.bin");
    return caie;
}

// ---- translator -----------------------------------------------------------------

void cmd_train_xlate(const TrainXlateArgs& args) {
    const auto blocks_a = corpus::read_corpus_file(args.corpus_a);
    const auto blocks_b = corpus::read_corpus_file(args.corpus_b);
    const corpus::Vocab vocab_a = corpus::read_vocab_file(args.vocab_a);
    const corpus::Vocab vocab_b = corpus::read_vocab_file(args.vocab_b);
    const embed::EmbeddingMatrix caie_a = embed::read_embedding_binary(args.caie_a);
    const embed::EmbeddingMatrix caie_b = embed::read_embedding_binary(args.caie_b);
    const corpus::MonoCorpus mono_a =
        corpus::encode_corpus(blocks_a, vocab_a, asmtext::Arch::X86, corpus::OptLevel::O0);
    const corpus::MonoCorpus mono_b =
        corpus::encode_corpus(blocks_b, vocab_b, asmtext::Arch::Arm, corpus::OptLevel::O0);

    xlate::TranslationModel model = xlate::train_translator(
        mono_a, mono_b, caie_a.rows, vocab_a, caie_b.rows, vocab_b, args.schedule);
    model.arch_a = args.arch_a;
    model.arch_b = args.arch_b;

    std::ostringstream cfgs;
    cfgs << "train-xlate it=" << args.schedule.iterations << " bs=" << args.schedule.batch_size
         << " lr=" << args.schedule.learning_rate << " henc=" << args.schedule.hidden_enc
         << " hdec=" << args.schedule.hidden_dec;
    xlate::write_model(args.out_model, model, Provenance{args.schedule.seed, fnv1a64(cfgs.str())});
}

namespace {

xlate::Side side_from_string(const std::string& s) {
    const std::string u = to_upper(trim(s));
    if (u == "A") return xlate::Side::A;
    if (u == "B") return xlate::Side::B;
    throw ConfigError("side must be 'a' or 'b', got: " + s);
}

}  // namespace

void cmd_translate(const TranslateArgs& args) {
    const xlate::TranslationModel model = xlate::read_model(args.model);
    const auto blocks = corpus::read_corpus_file(args.input);
    const xlate::Side from = side_from_string(args.from);
    std::optional<embed::EmbeddingMatrix> src_caie;
    if (!args.src_embed_prefix.empty()) {
        const std::string bin = args.src_embed_prefix + ".caie.bin";
        src_caie = fs::exists(bin) ? load_caie(bin, args.src_embed_prefix)
                                   : load_embedding(args.src_embed_prefix);
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(blocks.size());
    for (const auto& block : blocks) {
        auto words = xlate::translate_block(model, block, from, args.beam_width,
                                            src_caie ? &*src_caie : nullptr);
        if (words.empty()) words.push_back(corpus::kSpecialWords[corpus::kUnk]);
        out.push_back(std::move(words));
    }
    Provenance prov{model.schedule.seed, fnv1a64("translate beam=" + std::to_string(args.beam_width))};
    corpus::write_corpus_file(args.out, out, prov);
}

// ---- bleu -----------------------------------------------------------------------

BleuResult cmd_bleu(const BleuArgs& args) {
    const xlate::TranslationModel model = xlate::read_model(args.model);
    const auto blocks = corpus::read_corpus_file(args.corpus_src);
    const FunctionIndex functions = read_functions_file(args.functions_src);
    const toyoracle::Lexicon lexicon =
        toyoracle::Lexicon::deserialize(read_text_file(args.oracle_lexicon));
    const xlate::Side from = side_from_string(args.from);
    const toyoracle::Direction dir =
        from == xlate::Side::B ? toyoracle::Direction::BtoA : toyoracle::Direction::AtoB;

    BleuResult result;
    std::vector<std::vector<std::string>> all_candidates, all_references;
    std::vector<std::array<std::string, 3>> examples;  // source, reference, translated
    for (std::size_t f = 0; f < functions.ids.size(); ++f) {
        const auto src_blocks = gather_function_blocks(blocks, functions.blocks[f]);
        std::vector<std::vector<std::string>> cand, ref;
        for (const auto& src : src_blocks) {
            auto translated = xlate::translate_block(model, src, from, args.beam_width);
            if (translated.empty()) translated.push_back(corpus::kSpecialWords[corpus::kUnk]);
            ref.push_back(toyoracle::oracle_translate(src, lexicon, dir));
            cand.push_back(std::move(translated));
        }
        if (examples.size() < 3) {
            auto join = [](const std::vector<std::string>& words) {
                std::string s;
                for (std::size_t i = 0; i < words.size(); ++i) {
                    if (i) s += "; ";
                    s += words[i];
                }
                return s;
            };
            examples.push_back({join(src_blocks[0]), join(ref[0]), join(cand[0])});
        }
        const double fn_bleu = evalkit::bleu_score(cand, ref, 4, true);
        result.per_function.emplace_back(functions.ids[f], fn_bleu);
        all_candidates.insert(all_candidates.end(), cand.begin(), cand.end());
        all_references.insert(all_references.end(), ref.begin(), ref.end());
    }
    if (result.per_function.empty()) throw DataFormatError("bleu: no functions to evaluate");
    double sum = 0;
    for (const auto& [id, b] : result.per_function) sum += b;
    result.mean_function_bleu = sum / static_cast<double>(result.per_function.size());
    result.corpus_bleu_unsmoothed = evalkit::bleu_score(all_candidates, all_references, 4, false);

    if (!args.out_report.empty()) {
        std::ostringstream out;
        out << Provenance{model.schedule.seed, fnv1a64("bleu")}.line();
        for (std::size_t k = 0; k < examples.size(); ++k) {
            out << "# example " << k + 1 << " source:     " << examples[k][0] << "\n";
            out << "# example " << k + 1 << " reference:  " << examples[k][1] << "\n";
            out << "# example " << k + 1 << " translated: " << examples[k][2] << "\n";
        }
        out << "function\tbleu\n";
        for (const auto& [id, b] : result.per_function)
            out << id << '\t' << format_double(b, 6) << '\n';
        out << "# mean function BLEU: " << format_double(result.mean_function_bleu, 6) << "\n";
        out << "# corpus BLEU (unsmoothed): " << format_double(result.corpus_bleu_unsmoothed, 6)
            << "\n";
        write_text_file(args.out_report, out.str());
    }
    return result;
}

// ---- funcsim ---------------------------------------------------------------------

FuncsimResult cmd_funcsim(const FuncsimArgs& args) {
    const xlate::TranslationModel model = xlate::read_model(args.model);
    const embed::EmbeddingMatrix caie_a = load_caie(args.caie_a, args.embed_prefix_a);
    const auto corpus_a = corpus::read_corpus_file(args.corpus_a);
    const auto corpus_b = corpus::read_corpus_file(args.corpus_b);
    const FunctionIndex fa = read_functions_file(args.functions_a);
    const FunctionIndex fb = read_functions_file(args.functions_b);
    if (fa.ids.size() != fb.ids.size())
        throw DataFormatError("funcsim: function sets must pair up");
    std::optional<embed::EmbeddingMatrix> src_caie;
    if (!args.embed_prefix_b.empty()) src_caie = load_embedding(args.embed_prefix_b);

    const std::size_t n = fa.ids.size();
    std::vector<Eigen::VectorXd> emb_a(n), emb_b(n);
    for (std::size_t i = 0; i < n; ++i) {
        emb_a[i] = evalkit::function_embedding(gather_function_blocks(corpus_a, fa.blocks[i]),
                                               caie_a);
        // translate the B-side function into the A space first
        const auto src_blocks = gather_function_blocks(corpus_b, fb.blocks[i]);
        std::vector<std::vector<std::string>> translated;
        for (const auto& src : src_blocks) {
            auto words = xlate::translate_block(model, src, xlate::Side::B, args.beam_width,
                                                src_caie ? &*src_caie : nullptr);
            if (words.empty()) words.push_back(corpus::kSpecialWords[corpus::kUnk]);
            translated.push_back(std::move(words));
        }
        emb_b[i] = evalkit::function_embedding(translated, caie_a);
    }

    Rng rng(args.seed);
    std::vector<evalkit::ScoredPair> pairs;
    for (std::size_t i = 0; i < n; ++i) {
        pairs.push_back({evalkit::cosine_similarity(emb_a[i], emb_b[i]), 1, fa.ids[i], fb.ids[i]});
        if (n > 1) {
            std::size_t j = rng.uniform_int(n - 1);
            if (j >= i) ++j;
            pairs.push_back(
                {evalkit::cosine_similarity(emb_a[i], emb_b[j]), 0, fa.ids[i], fb.ids[j]});
        }
    }
    evalkit::ThresholdPolicy policy;
    policy.kind = evalkit::ThresholdPolicy::Kind::ValidationSplit;
    policy.validation_fraction = args.validation_fraction;
    policy.seed = args.seed;
    FuncsimResult result;
    result.accuracy = evalkit::pair_accuracy(pairs, policy);
    result.pair_count = static_cast<int>(pairs.size());

    if (!args.out_report.empty()) {
        std::ostringstream out;
        out << Provenance{args.seed, fnv1a64("funcsim")}.line();
        out << "Tool for instruction embedding generation: " << embed::mode_name(caie_a.mode)
            << "\n";
        out << "pairs: " << result.pair_count << "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "accuracy: %.2f%%\n", result.accuracy * 100.0);
        out << buf;
        write_text_file(args.out_report, out.str());
    }
    return result;
}

// ---- vulnerability harness ---------------------------------------------------------

void cmd_vuln_train(const VulnTrainArgs& args) {
    vulndetect::LabeledSet set =
        vulndetect::LabeledSet::deserialize(read_text_file(args.dataset));
    if (args.oversample.duplicate_copies > 0)
        set = vulndetect::duplicate_minority(set, args.oversample.duplicate_copies);
    set = args.oversample.method == vulndetect::OversampleConfig::Method::Smote
              ? vulndetect::smote_oversample(set, args.oversample)
              : vulndetect::ros_oversample(set, args.oversample);
    const vulndetect::LinearModel model =
        vulndetect::train_linear_svm(set, args.lambda, args.epochs, args.seed);

    std::ostringstream out;
    out << Provenance{args.seed, fnv1a64("vuln-train")}.line();
    out << "# svm_hash=" << hash_hex(model.hash()) << "\n";
    out << model.serialize();
    write_text_file(args.out_model, out.str());
}

VulnScanResult cmd_vuln_scan(const VulnScanArgs& args) {
    const vulndetect::LinearModel svm =
        vulndetect::LinearModel::deserialize(read_text_file(args.svm_model));
    const xlate::TranslationModel model = xlate::read_model(args.xlate_model);
    const embed::EmbeddingMatrix caie_a = load_caie(args.caie_a, args.embed_prefix_a);
    const auto corpus_b = corpus::read_corpus_file(args.corpus_b);
    const FunctionIndex fb = read_functions_file(args.functions_b);
    const auto labels = read_labels_file(args.labels_b);
    if (labels.size() != fb.ids.size())
        throw DataFormatError("vuln-scan: labels must cover every function");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i].first != fb.ids[i])
            throw DataFormatError("vuln-scan: label order mismatch at '" + labels[i].first + "'");
    std::optional<embed::EmbeddingMatrix> src_caie;
    if (!args.embed_prefix_b.empty()) src_caie = load_embedding(args.embed_prefix_b);
    const xlate::Side from = side_from_string(args.from);

    vulndetect::LabeledSet test;
    test.x.resize(static_cast<Eigen::Index>(fb.ids.size()), caie_a.d);
    for (std::size_t i = 0; i < fb.ids.size(); ++i) {
        const auto src_blocks = gather_function_blocks(corpus_b, fb.blocks[i]);
        std::vector<std::vector<std::string>> translated;
        for (const auto& src : src_blocks) {
            auto words = xlate::translate_block(model, src, from, args.beam_width,
                                                src_caie ? &*src_caie : nullptr);
            if (words.empty()) words.push_back(corpus::kSpecialWords[corpus::kUnk]);
            translated.push_back(std::move(words));
        }
        test.x.row(static_cast<Eigen::Index>(i)) =
            evalkit::function_embedding(translated, caie_a).transpose();
        test.y.push_back(labels[i].second);
    }

    VulnScanResult result;
    result.metrics = vulndetect::evaluate_detection(svm, test);
    result.svm_hash = svm.hash();
    if (!args.out_report.empty()) {
        auto cell = [](const std::optional<double>& v) {
            char buf[24];
            if (!v) return std::string("undefined");
            std::snprintf(buf, sizeof buf, "%.4f", *v);
            return std::string(buf);
        };
        std::ostringstream out;
        out << Provenance{model.schedule.seed, fnv1a64("vuln-scan")}.line();
        out << "svm_hash=" << hash_hex(result.svm_hash) << "\n";
        out << "True Positive Rate  False Positive Rate  Precision  F1-score\n";
        char row[128];
        std::snprintf(row, sizeof row, "%-18s  %-19s  %-9s  %-8s\n",
                      cell(result.metrics.tpr).c_str(), cell(result.metrics.fpr).c_str(),
                      cell(result.metrics.precision).c_str(), cell(result.metrics.f1).c_str());
        out << row;
        write_text_file(args.out_report, out.str());
    }
    return result;
}

// ---- toygen -------------------------------------------------------------------------

void cmd_toygen(const ToygenArgs& args) {
    const toyoracle::TwinCorpus twin = toyoracle::generate_twin_corpus(args.spec);
    fs::create_directories(args.out_dir);
    std::ostringstream cfgs;
    cfgs << "toygen v=" << args.spec.vocab_size << " blocks=" << args.spec.corpus_blocks
         << " p=" << args.spec.swap_prob << " zipf=" << args.spec.zipf_exponent << " len="
         << args.spec.block_len_min << ".." << args.spec.block_len_max;
    Provenance prov{args.spec.seed, fnv1a64(cfgs.str())};

    corpus::write_corpus_file(args.out_dir + "/corpus_a.txt", twin.blocks_a, prov);
    corpus::write_corpus_file(args.out_dir + "/corpus_b.txt", twin.blocks_b, prov);
    write_text_file(args.out_dir + "/lexicon.tsv", prov.line() + twin.lexicon.serialize());

    FunctionIndex fa, fb;
    char buf[32];
    for (std::size_t i = 0; i < twin.functions_a.size(); ++i) {
        std::snprintf(buf, sizeof buf, "f%05zu", i);
        fa.ids.push_back(buf);
        fb.ids.push_back(buf);
        fa.blocks.push_back(twin.functions_a[i]);
        fb.blocks.push_back(twin.functions_b[i]);
    }
    write_functions_file(args.out_dir + "/functions_a.tsv", fa, "a", prov);
    write_functions_file(args.out_dir + "/functions_b.tsv", fb, "b", prov);

    json meta;
    meta["vocab_size"] = args.spec.vocab_size;
    meta["blocks"] = args.spec.corpus_blocks;
    meta["functions"] = twin.functions_a.size();
    meta["swap_prob"] = args.spec.swap_prob;
    meta["swap_opportunities"] = twin.swap_opportunities;
    meta["swaps_applied"] = twin.swaps_applied;
    meta["seed"] = args.spec.seed;
    write_text_file(args.out_dir + "/toygen.meta.json", meta.dump(2) + "\n");
}

// ---- end-to-end demo -----------------------------------------------------------------

E2eResult cmd_e2e_demo(const E2eArgs& args) {
    fs::create_directories(args.out_dir);
    const std::string dir = args.out_dir;

    // 1. twin corpora
    ToygenArgs toygen;
    toygen.spec = args.spec;
    toygen.spec.seed = args.seed;
    toygen.out_dir = dir;
    cmd_toygen(toygen);

    // 2. MAIE per side
    embed::TrainConfig ecfg;
    ecfg.dim = args.embed_dim;
    ecfg.epochs = args.embed_epochs;
    ecfg.mode = args.embed_mode;
    ecfg.buckets = args.subword_buckets;
    ecfg.seed = args.seed + 11;
    cmd_train_embed({dir + "/corpus_a.txt", dir + "/maie_a", ecfg, 1});
    ecfg.seed = args.seed + 12;
    cmd_train_embed({dir + "/corpus_b.txt", dir + "/maie_b", ecfg, 1});

    // 3. map B (low-resource analog) into A's space
    MapArgs map;
    map.src_prefix = dir + "/maie_b";
    map.tgt_prefix = dir + "/maie_a";
    map.out_dir = dir + "/map";
    map.src_arch = "b";
    map.tgt_arch = "a";
    map.cfg.seed = args.seed + 21;
    map.cfg.vocab_limit = args.spec.vocab_size;
    map.cfg.init = xmap::InitMode::FrequencyRank;
    cmd_map(map);

    // 4. translator
    TrainXlateArgs tx;
    tx.corpus_a = dir + "/corpus_a.txt";
    tx.corpus_b = dir + "/corpus_b.txt";
    tx.vocab_a = dir + "/maie_a.vocab.txt";
    tx.vocab_b = dir + "/maie_b.vocab.txt";
    tx.caie_a = dir + "/map/caie_tgt.bin";
    tx.caie_b = dir + "/map/caie_src.bin";
    tx.out_model = dir + "/xlate.ubt";
    tx.schedule.iterations = args.xlate_iterations;
    tx.schedule.batch_size = args.xlate_batch;
    tx.schedule.learning_rate = args.xlate_lr;
    tx.schedule.hidden_enc = args.hidden_enc;
    tx.schedule.hidden_dec = args.hidden_dec;
    tx.schedule.seed = args.seed + 31;
    cmd_train_xlate(tx);

    // 5. translate the B corpus and score token accuracy against the lexicon
    TranslateArgs tr;
    tr.model = dir + "/xlate.ubt";
    tr.input = dir + "/corpus_b.txt";
    tr.from = "b";
    tr.out = dir + "/corpus_b_translated.txt";
    cmd_translate(tr);

    const toyoracle::Lexicon lexicon =
        toyoracle::Lexicon::deserialize(read_text_file(dir + "/lexicon.tsv"));
    const auto blocks_b = corpus::read_corpus_file(dir + "/corpus_b.txt");
    const auto translated = corpus::read_corpus_file(dir + "/corpus_b_translated.txt");
    std::int64_t matched = 0, ref_tokens = 0;
    for (std::size_t i = 0; i < blocks_b.size(); ++i) {
        const auto ref = toyoracle::oracle_translate(blocks_b[i], lexicon,
                                                     toyoracle::Direction::BtoA);
        ref_tokens += static_cast<std::int64_t>(ref.size());
        const auto& out = translated[i];
        for (std::size_t t = 0; t < ref.size() && t < out.size(); ++t)
            if (ref[t] == out[t]) ++matched;
    }
    E2eResult result;
    result.token_accuracy =
        ref_tokens > 0 ? static_cast<double>(matched) / static_cast<double>(ref_tokens) : 0.0;

    // 6. function-level BLEU against the oracle rendering
    BleuArgs bleu;
    bleu.model = dir + "/xlate.ubt";
    bleu.corpus_src = dir + "/corpus_b.txt";
    bleu.functions_src = dir + "/functions_b.tsv";
    bleu.from = "b";
    bleu.oracle_lexicon = dir + "/lexicon.tsv";
    bleu.out_report = dir + "/bleu_report.txt";
    result.mean_function_bleu = cmd_bleu(bleu).mean_function_bleu;

    // 7. cross-architecture function similarity
    FuncsimArgs fsim;
    fsim.model = dir + "/xlate.ubt";
    fsim.caie_a = dir + "/map/caie_tgt.bin";
    fsim.embed_prefix_a = dir + "/maie_a";
    fsim.corpus_a = dir + "/corpus_a.txt";
    fsim.functions_a = dir + "/functions_a.tsv";
    fsim.corpus_b = dir + "/corpus_b.txt";
    fsim.functions_b = dir + "/functions_b.tsv";
    fsim.embed_prefix_b = dir + "/maie_b";
    fsim.out_report = dir + "/funcsim_report.txt";
    fsim.seed = args.seed + 41;
    result.funcsim_accuracy = cmd_funcsim(fsim).accuracy;

    // 8. vulnerability transfer: train on A embeddings, scan translated B
    const embed::EmbeddingMatrix caie_a = load_caie(dir + "/map/caie_tgt.bin", dir + "/maie_a");
    const auto corpus_a = corpus::read_corpus_file(dir + "/corpus_a.txt");
    const FunctionIndex fa = read_functions_file(dir + "/functions_a.tsv");
    const toyoracle::TwinCorpus twin = toyoracle::generate_twin_corpus(toygen.spec);

    // synthetic vulnerable function: frequent marker words at high density
    std::vector<std::string> markers;
    for (int k = 10; k < 18; ++k) markers.push_back(twin.lexicon.words_a[static_cast<std::size_t>(k)]);
    std::vector<std::vector<std::string>> vuln_fn_a;
    for (int b = 0; b < 8; ++b) {
        std::vector<std::string> block;
        for (int t = 0; t < 8; ++t)
            block.push_back(markers[static_cast<std::size_t>((b + t) % 8)]);
        vuln_fn_a.push_back(std::move(block));
    }

    vulndetect::LabeledSet train;
    train.x.resize(static_cast<Eigen::Index>(fa.ids.size()) + 1, caie_a.d);
    for (std::size_t i = 0; i < fa.ids.size(); ++i) {
        train.x.row(static_cast<Eigen::Index>(i)) =
            evalkit::function_embedding(gather_function_blocks(corpus_a, fa.blocks[i]), caie_a)
                .transpose();
        train.y.push_back(0);
    }
    train.x.bottomRows(1) = evalkit::function_embedding(vuln_fn_a, caie_a).transpose();
    train.y.push_back(1);
    write_text_file(dir + "/vuln_train.tsv",
                    Provenance{args.seed, fnv1a64("vuln dataset")}.line() + train.serialize());

    VulnTrainArgs vt;
    vt.dataset = dir + "/vuln_train.tsv";
    vt.out_model = dir + "/vuln_svm.txt";
    vt.oversample.method = vulndetect::OversampleConfig::Method::Smote;
    vt.oversample.k_neighbors = 2;
    vt.oversample.sampling_ratio = 0.02;
    vt.oversample.duplicate_copies = 3;
    vt.oversample.seed = args.seed + 51;
    vt.seed = args.seed + 52;
    cmd_vuln_train(vt);
    result.svm_hash_train =
        vulndetect::LinearModel::deserialize(read_text_file(dir + "/vuln_svm.txt")).hash();

    // B-side test set: translated benign functions plus noisy images of the
    // vulnerable function
    const auto corpus_b_blocks = corpus::read_corpus_file(dir + "/corpus_b.txt");
    FunctionIndex fb = read_functions_file(dir + "/functions_b.tsv");
    std::vector<std::vector<std::string>> extra_blocks = corpus_b_blocks;
    Rng vrng(args.seed + 53);
    std::vector<std::string> test_ids = fb.ids;
    std::vector<int> test_labels(fb.ids.size(), 0);
    for (int variant = 0; variant < 5; ++variant) {
        std::vector<int> ids;
        for (const auto& block_a : vuln_fn_a) {
            auto block_b = toyoracle::oracle_translate(block_a, twin.lexicon,
                                                       toyoracle::Direction::AtoB);
            for (std::size_t t = 0; t + 1 < block_b.size();) {
                if (vrng.uniform() < 0.1) {
                    std::swap(block_b[t], block_b[t + 1]);
                    t += 2;
                } else {
                    ++t;
                }
            }
            ids.push_back(static_cast<int>(extra_blocks.size()));
            extra_blocks.push_back(std::move(block_b));
        }
        fb.ids.push_back("vuln" + std::to_string(variant));
        fb.blocks.push_back(std::move(ids));
        test_ids.push_back("vuln" + std::to_string(variant));
        test_labels.push_back(1);
    }
    Provenance scan_prov{args.seed, fnv1a64("vuln scan set")};
    corpus::write_corpus_file(dir + "/vuln_corpus_b.txt", extra_blocks, scan_prov);
    write_functions_file(dir + "/vuln_functions_b.tsv", fb, "b", scan_prov);
    write_labels_file(dir + "/vuln_labels_b.tsv", test_ids, test_labels, scan_prov);

    VulnScanArgs vs;
    vs.svm_model = dir + "/vuln_svm.txt";
    vs.xlate_model = dir + "/xlate.ubt";
    vs.caie_a = dir + "/map/caie_tgt.bin";
    vs.embed_prefix_a = dir + "/maie_a";
    vs.corpus_b = dir + "/vuln_corpus_b.txt";
    vs.functions_b = dir + "/vuln_functions_b.tsv";
    vs.labels_b = dir + "/vuln_labels_b.tsv";
    vs.embed_prefix_b = dir + "/maie_b";
    vs.out_report = dir + "/vuln_report.txt";
    const VulnScanResult scan = cmd_vuln_scan(vs);
    result.vuln = scan.metrics;
    result.svm_hash_scan = scan.svm_hash;

    json manifest;
    manifest["seed"] = args.seed;
    manifest["token_accuracy"] = result.token_accuracy;
    manifest["mean_function_bleu"] = result.mean_function_bleu;
    manifest["funcsim_accuracy"] = result.funcsim_accuracy;
    manifest["vuln"] = vulndetect::format_metrics(result.vuln);
    manifest["svm_hash_train"] = hash_hex(result.svm_hash_train);
    manifest["svm_hash_scan"] = hash_hex(result.svm_hash_scan);
    manifest["artifacts"] = {"corpus_a.txt",       "corpus_b.txt",
                             "lexicon.tsv",        "functions_a.tsv",
                             "functions_b.tsv",    "maie_a.*",
                             "maie_b.*",           "map/*",
                             "xlate.ubt",          "corpus_b_translated.txt",
                             "bleu_report.txt",    "funcsim_report.txt",
                             "vuln_svm.txt",       "vuln_report.txt"};
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
    return result;
}

}  // namespace ubt::pipeline
