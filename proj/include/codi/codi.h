/* Copyright 2026 The CoDi Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the CoDi conversational data-synthesis and evaluation
 * toolkit.
 *
 * Conventions:
 *   - Every fallible call returns a codi_status; CODI_OK is 0. On failure a
 *     human-readable message is available from codi_last_error() until the
 *     next call on the same thread.
 *   - Output strings (char **out parameters) are allocated by the library
 *     and must be released with codi_string_free(). They are NUL-terminated
 *     UTF-8, usually JSON.
 *   - Coarse pipeline entry points take their options as a JSON object
 *     string; unknown option keys are rejected. Network credentials are
 *     taken from the CODI_API_KEY environment variable, never from options.
 */

#ifndef CODI_CODI_H_
#define CODI_CODI_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define CODI_API __declspec(dllexport)
#else
#define CODI_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum codi_status {
  CODI_OK = 0,
  /* Domain failures (a CLI maps these to exit code 1). */
  CODI_ERR_INVALID_ARGUMENT = 1, /* bad values, exhausted stubs, duplicates */
  CODI_ERR_PARSE = 2,            /* tagged-text parse failure */
  CODI_ERR_TAG_COLLISION = 3,    /* turn text embeds a declared role tag */
  CODI_ERR_GRAPH = 4,            /* graph failed validation */
  CODI_ERR_BUDGET = 5,           /* synthesis budget spent before N records */
  /* Environment / configuration failures (exit code 2). */
  CODI_ERR_CONFIG = 6,           /* config file or option defects */
  CODI_ERR_IO = 7,               /* unreadable/unwritable files, unreachable host */
  CODI_ERR_SCHEMA = 8,           /* data file does not match its schema */
  CODI_ERR_NETWORK = 9,          /* HTTP failure after retries */
  CODI_ERR_INTERNAL = 10         /* unexpected exception */
} codi_status;

/* Library semantic version, e.g. "0.1.0". Static storage; do not free. */
CODI_API const char* codi_version(void);

/* Message for the most recent failure on this thread ("" after success).
 * Static thread-local storage; do not free. */
CODI_API const char* codi_last_error(void);

/* Releases strings returned through char **out parameters. NULL is a no-op. */
CODI_API void codi_string_free(char* s);

/* ---- Conversations ----------------------------------------------------
 * A conversation is an ordered list of (role, text) turns. Roles match
 * [A-Z][A-Z0-9_]{0,31}. Serialization renders "[ROLE] text [/ROLE]" per
 * turn, newline-separated; parse() inverts it.
 */

typedef struct codi_conversation codi_conversation;

/* Empty conversation; free with codi_conversation_free(). Never fails. */
CODI_API codi_conversation* codi_conversation_new(void);

CODI_API void codi_conversation_free(codi_conversation* conversation);

CODI_API codi_status codi_conversation_append(codi_conversation* conversation,
                                              const char* role,
                                              const char* text);

CODI_API size_t codi_conversation_turn_count(const codi_conversation* conversation);

/* Turn accessors; returned pointers stay valid until the conversation is
 * mutated or freed. NULL (with codi_last_error set) on a bad index. */
CODI_API const char* codi_conversation_role(const codi_conversation* conversation,
                                            size_t index);
CODI_API const char* codi_conversation_text(const codi_conversation* conversation,
                                            size_t index);

/* Renders the tagged text. Fails with CODI_ERR_TAG_COLLISION when a turn
 * embeds a declared role's tag. */
CODI_API codi_status codi_conversation_serialize(const codi_conversation* conversation,
                                                 char** out_text);

/* Parses tagged text into a fresh conversation. */
CODI_API codi_status codi_conversation_parse(const char* text,
                                             codi_conversation** out_conversation);

/* ---- Pipeline entry points --------------------------------------------
 * Each takes a JSON options object and yields a JSON result document.
 */

/* Loads the config document and validates the conversational graph.
 * Succeeds even when findings exist; the report carries them:
 *   {"ok": bool, "findings": [{"category","subject","detail"}], "warnings": [...]}
 */
CODI_API codi_status codi_run_validate_graph(const char* config_path,
                                             char** out_report_json);

/* Options: {"config": path, "n": count, "seed": uint64}
 * Result: one chain per line, link ids joined with " -> ". */
CODI_API codi_status codi_run_sample_chains(const char* options_json,
                                            char** out_chains_text);

/* Options: {"config": path, "contexts": path, "n": count, "out": path,
 *           "seed": uint64, "seeds": path?, "stub": path? | "teacher_url": url?,
 *           "model": string?, "concurrency": int?, "max_attempts": uint64?,
 *           "per_turn_retries": int?}
 * Exactly one of "stub" / "teacher_url" must be given. Writes the dataset
 * (JSON lines) and its ".manifest.json" sidecar atomically. The manifest is
 * returned; CODI_ERR_BUDGET signals produced < n (manifest still valid). */
CODI_API codi_status codi_run_synthesize(const char* options_json,
                                         char** out_manifest_json);

/* Options: {"in": dataset path, "out": path, "policy": path?}
 * Default policy weighs AGENT 1 and every other role 0. Result:
 * {"records": n, "out": path}. Per-record defects (bad schema, collisions,
 * broken span partition) fail with the record's line number. */
CODI_API codi_status codi_run_annotate(const char* options_json,
                                       char** out_summary_json);

/* Options: {"gold": path, "format": "coqa"|"quac",
 *           "predictions": path? | "model_url": url?, "model": string?,
 *           "metric": "recall"|"f1"|"rouge1"|"rouge2"|"rougeL",
 *           "history": "gold"|"pred", "per_turn_csv": path?}
 * Result: the metric report (corpus mean, per-turn means, per-example
 * scores, dialog counts). */
CODI_API codi_status codi_run_evaluate(const char* options_json,
                                       char** out_report_json);

/* Options: {"in": path, "field": dotted path, e.g. "data[].answers[].input_text"}
 * Result: {"average": real, "median": real, "p90": real, "count": n} over
 * whitespace word counts of the selected strings. */
CODI_API codi_status codi_run_length_stats(const char* options_json,
                                           char** out_stats_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* CODI_CODI_H_ */
