import type { Mode, QueryContext } from "./types.js";

export interface Turn {
  readonly query: string;
  readonly mode: Mode;
  readonly answer: string;
  readonly context: QueryContext;
}

/**
 * In-memory session log. Turns are deep-frozen on append: the context
 * snapshot is exactly what the service returned and can never be
 * retouched by later mode toggles or queries.
 */
export class ConsoleSession {
  private readonly log: Turn[] = [];
  activeMode: Mode = "grg";

  constructor(readonly baseUrl: string = "") {}

  get turns(): readonly Turn[] {
    return this.log;
  }

  append(query: string, mode: Mode, answer: string, context: QueryContext): Turn {
    const turn: Turn = deepFreeze({ query, mode, answer, context });
    this.log.push(turn);
    return turn;
  }
}

function deepFreeze<T>(value: T): T {
  if (value !== null && typeof value === "object") {
    for (const key of Object.getOwnPropertyNames(value)) {
      deepFreeze((value as Record<string, unknown>)[key]);
    }
    Object.freeze(value);
  }
  return value;
}

/**
 * Single in-flight query; later submissions wait their turn instead of
 * racing. Failures do not poison the queue.
 */
export class QueryQueue {
  private tail: Promise<unknown> = Promise.resolve();
  private depth = 0;

  get pending(): number {
    return this.depth;
  }

  enqueue<T>(job: () => Promise<T>): Promise<T> {
    this.depth += 1;
    const run = this.tail.then(async () => {
      try {
        return await job();
      } finally {
        this.depth -= 1;
      }
    });
    this.tail = run.catch(() => undefined);
    return run;
  }
}
