import type { Mode, QueryResponse, Subgraph } from "./types.js";

export class ApiError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly code: string,
  ) {
    super(message);
  }

  /** 409 (stores not built) and 503 (adapter down) are service-side and retryable. */
  get retryable(): boolean {
    return this.status === 409 || this.status === 503;
  }
}

async function asJson(response: Response): Promise<unknown> {
  if (response.ok) return response.json();
  let code = "error";
  let message = `${response.status}`;
  try {
    const body = (await response.json()) as { error?: { code?: string; message?: string } };
    code = body.error?.code ?? code;
    message = body.error?.message ?? message;
  } catch {
    // non-envelope error body; keep the status text
  }
  throw new ApiError(message, response.status, code);
}

export class GatewayClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetcher: typeof fetch = fetch,
  ) {}

  async query(text: string, mode: Mode, imageIds: string[] = []): Promise<QueryResponse> {
    const response = await this.fetcher(`${this.baseUrl}/v1/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text, mode, image_ids: imageIds }),
    });
    return (await asJson(response)) as QueryResponse;
  }

  async entity(entityId: string, depth: 1 | 2): Promise<Subgraph> {
    const response = await this.fetcher(
      `${this.baseUrl}/v1/graph/entity/${encodeURIComponent(entityId)}?depth=${depth}`,
    );
    return (await asJson(response)) as Subgraph;
  }

  // chunk ids contain '#', which must not be read as a URL fragment
  async chunk(chunkId: string): Promise<unknown> {
    const response = await this.fetcher(`${this.baseUrl}/v1/chunks/${encodeURIComponent(chunkId)}`);
    return asJson(response);
  }

  async health(): Promise<unknown> {
    return asJson(await this.fetcher(`${this.baseUrl}/v1/health`));
  }
}
