/* C interface to the alicesays pairing toolkit.
 *
 * Every call returns an as_status; on failure as_last_error() describes the
 * problem for the calling thread. Handles are opaque and owned by the caller
 * until passed to the matching *_destroy. Strings returned through char**
 * are heap-allocated and released with as_string_free.
 */
#ifndef ALICESAYS_H
#define ALICESAYS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define AS_API __declspec(dllexport)
#else
#define AS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum as_status {
  AS_OK = 0,
  AS_ERR_INVALID_INPUT = 1,
  AS_ERR_INVALID_STATE = 2,
  AS_ERR_INTERNAL = 3,
  AS_ERR_TIMEOUT = 4,
  AS_ERR_CLOSED = 5,
  AS_ERR_PROTOCOL_ABORT = 6,
  AS_ERR_IO = 7,
  AS_ERR_UNKNOWN = 99
} as_status;

AS_API const char* as_status_name(as_status status);
AS_API const char* as_last_error(void);
AS_API const char* as_version(void);
AS_API void as_string_free(char* s);

/* ---- colors ---------------------------------------------------------- */

typedef enum as_color { AS_GREEN = 0, AS_RED = 1, AS_BLUE = 2, AS_YELLOW = 3 } as_color;

/* bits: NUL-terminated string of '0'/'1' with even length. Writes
 * strlen(bits)/2 colors (as_color values) when capacity allows. */
AS_API as_status as_colors_from_bits(const char* bits, uint8_t* colors, size_t capacity,
                                     size_t* count);
/* Writes 2*count bits plus a terminating NUL; capacity >= 2*count + 1. */
AS_API as_status as_bits_from_colors(const uint8_t* colors, size_t count, char* bits,
                                     size_t capacity);

/* ---- game engine ----------------------------------------------------- */

typedef struct as_game as_game;

typedef enum as_role { AS_ROLE_DISPLAY = 0, AS_ROLE_INPUT = 1 } as_role;

typedef enum as_game_status {
  AS_GAME_IN_PROGRESS = 0,
  AS_GAME_ABORT_PROMPT = 1,
  AS_GAME_ABORTED = 2,
  AS_GAME_COMPLETED = 3
} as_game_status;

typedef enum as_press_outcome {
  AS_PRESS_PARTIAL = 0,
  AS_PRESS_ROUND_MATCHED = 1,
  AS_PRESS_MISMATCH = 2
} as_press_outcome;

typedef struct as_game_state {
  as_role role;
  int committed;
  int round_len;
  int input_pos;
  int single_fail_count;
  as_game_status status;
} as_game_state;

AS_API as_status as_game_create(as_role role, const uint8_t* colors, size_t count,
                                int abort_threshold, as_game** out);
AS_API void as_game_destroy(as_game* game);
AS_API as_status as_game_get_state(const as_game* game, as_game_state* out);
/* Current pattern; logs a PatternDisplayed event on display devices. */
AS_API as_status as_game_pattern(as_game* game, uint8_t* colors, size_t capacity,
                                 size_t* count);
AS_API as_status as_game_press(as_game* game, as_color color, as_press_outcome* outcome);
AS_API as_status as_game_next(as_game* game);
AS_API as_status as_game_previous(as_game* game);
/* restart != 0 chooses restart; *restart_pairing is set to 1 when the caller
 * must discard keys and pair again. */
AS_API as_status as_game_resolve_abort(as_game* game, int restart, int* restart_pairing);
/* JSON array, one object per event. */
AS_API as_status as_game_events_json(const as_game* game, char** out);
AS_API const char* as_abort_prompt(void);

/* ---- in-band channel and pairing -------------------------------------- */

typedef struct as_channel as_channel;
typedef struct as_listener as_listener;

typedef enum as_pairing_role { AS_INITIATOR = 0, AS_RESPONDER = 1 } as_pairing_role;

typedef struct as_pairing_result {
  uint8_t session_key[32];
  int oob_bits;
  char oob[257]; /* '0'/'1' characters, NUL-terminated */
} as_pairing_result;

AS_API as_status as_channel_memory_pair(as_channel** a, as_channel** b);
AS_API as_status as_channel_connect(const char* host, uint16_t port, int timeout_ms,
                                    as_channel** out);
AS_API as_status as_listener_create(const char* host, uint16_t port, as_listener** out);
AS_API uint16_t as_listener_port(const as_listener* listener);
AS_API as_status as_listener_accept(as_listener* listener, int timeout_ms, as_channel** out);
AS_API void as_listener_destroy(as_listener* listener);
/* Wraps inner (ownership moves into the result, even on failure) with an
 * adversary. policy_json: {"mode":"passive|mitm|corrupt|drop","seed":N,
 * "flips":[[frame,bit],...],"drops":[frame,...]}. */
AS_API as_status as_channel_interpose(as_channel* inner, const char* policy_json,
                                      as_channel** out);
AS_API void as_channel_destroy(as_channel* channel);
AS_API as_status as_pair(as_channel* channel, as_pairing_role role, int oob_bits,
                         int timeout_ms, as_pairing_result* out);

/* ---- batch commands: JSON request in, report text out ------------------ */

AS_API as_status as_simulate(const char* request_json, char** out);
AS_API as_status as_attack(const char* request_json, char** out);
AS_API as_status as_oracle(const char* request_json, char** out);
AS_API as_status as_model_check(const char* request_json, char** out);
AS_API as_status as_calibrate(const char* request_json, char** out);
AS_API as_status as_demo_trace(const char* request_json, char** out);

/* ---- live service ----------------------------------------------------- */

typedef struct as_service as_service;

/* Binds immediately; AS_ERR_IO when the address is unavailable. */
AS_API as_status as_service_create(const char* config_json, as_service** out);
AS_API uint16_t as_service_port(const as_service* service);
/* Blocks until as_service_stop. */
AS_API as_status as_service_run(as_service* service);
/* Async-signal-safe. */
AS_API void as_service_stop(as_service* service);
AS_API void as_service_destroy(as_service* service);

#ifdef __cplusplus
}
#endif

#endif /* ALICESAYS_H */
